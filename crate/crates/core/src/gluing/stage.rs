use serde::{Deserialize, Serialize};

use super::ancilla::{ancilla_block, ancilla_component, build_ancilla_path, with_ancilla, AncillaPath, AncillaSystem};
use super::split::SplitSystem;
use super::{GluingStage, StageReport};
use crate::adiabatic::{evolve_path, qa_generator_spectral, qa_provider, Convergence, HamiltonianPath, Schedule, StepOrder};
use crate::chain::{embed_operator, SupportInterval};
use crate::error::{Error, Result};
use crate::filter::{make_filter, Filter, FilterKind};
use crate::linalg::{self, c64, Op, State};
use crate::oracle::eigendecompose;

/// Truncation radius of the seam generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha {
    Full,
    Radius(usize),
}

impl Alpha {
    pub fn radius(self) -> Option<usize> {
        match self {
            Alpha::Full => None,
            Alpha::Radius(a) => Some(a),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum StepPolicy {
    Fixed(usize),
    Converge(Convergence),
}

#[derive(Clone, Copy, Debug)]
pub struct EngineParams {
    pub gamma: f64,
    pub alpha: Alpha,
    pub filter_kind: FilterKind,
    pub steps: StepPolicy,
    pub order: StepOrder,
}

impl EngineParams {
    /// Full generator, Gaussian filter, Richardson steps doubled to convergence.
    pub fn full(gamma: f64) -> Self {
        Self {
            gamma,
            alpha: Alpha::Full,
            filter_kind: FilterKind::Gaussian,
            steps: StepPolicy::Converge(Convergence {
                start_steps: 4,
                max_steps: 256,
                tol: 1e-9,
            }),
            order: StepOrder::Richardson,
        }
    }

    pub fn with_alpha(mut self, alpha: Alpha) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_steps(mut self, steps: StepPolicy) -> Self {
        self.steps = steps;
        self
    }
}

/// `γ = c / (|x|·ΔE)`.
pub fn scaled_gamma(c: f64, x: f64, delta_e: f64) -> f64 {
    c / (x * delta_e)
}

/// Smallest radius whose window covers an `n`-site chain cut at `m`.
pub fn full_radius(m: usize, n: usize) -> usize {
    m.max(n - 1 - m)
}

/// `Λ_α = [m − α, m + α]` clipped to the chain.
pub fn window(m: usize, n: usize, alpha: Alpha) -> SupportInterval {
    let a = alpha.radius().unwrap_or(full_radius(m, n));
    SupportInterval {
        lo: m.saturating_sub(a),
        hi: (m + a).min(n - 1),
    }
}

/// `M_Λ(s)` on `Λ ∪ {C′}`: the bonds of `K` inside `Λ`, the full boundary
/// operator `H_I` and the polarizer.
pub fn window_system(split: &SplitSystem, path: &AncillaPath, win: SupportInterval) -> Result<AncillaSystem> {
    let n = split.n();
    if win.lo == 0 && win.hi == n - 1 {
        return Ok(path.system.clone());
    }
    if !(win.lo < split.m && win.hi >= split.m) {
        return Err(Error::InvalidArgument(format!("window {win:?} does not straddle the seam at {}", split.m)));
    }
    let width = win.width();
    let k = split.window_k(win.lo, win.hi)?;
    let mut h_i = embed_operator(&split.h_i, SupportInterval::new(split.m - 1 - win.lo, split.m - win.lo, width)?, width)?;
    for i in 0..h_i.nrows() {
        h_i[(i, i)] += c64::new(split.delta, 0.0);
    }
    Ok(AncillaSystem::new(&k, &h_i, split.m - win.lo, width, path.kappa(), path.system.flipped))
}

/// Everything `glue_once` needs besides the input state.
pub struct SeamEngine {
    pub path: AncillaPath,
    pub window: SupportInterval,
    pub system: AncillaSystem,
    pub filter: Filter,
}

impl SeamEngine {
    pub fn new(split: &SplitSystem, params: &EngineParams) -> Result<Self> {
        let path = build_ancilla_path(split, None)?;
        if let Alpha::Radius(0) = params.alpha {
            return Err(Error::InvalidArgument("truncation radius must be at least 1".into()));
        }
        let win = window(split.m, split.n(), params.alpha);
        let system = window_system(split, &path, win)?;
        let filter = make_filter(params.filter_kind, params.gamma)?;
        Ok(Self {
            path,
            window: win,
            system,
            filter,
        })
    }

    pub fn is_truncated(&self) -> bool {
        self.window.lo > 0 || self.window.hi + 1 < self.path.system.n
    }

    /// Window unitary `W` on `Λ ∪ {C′}` for a fixed number of steps.
    ///
    /// A window may cut a site off from every bond of its block, leaving
    /// `M_Λ` degenerate; the filtered generator is still defined, so the gap
    /// guard only applies to the untruncated sweep.
    pub fn sweep(&self, schedule: Schedule) -> Result<Op> {
        if !self.is_truncated() {
            return evolve_path(&mut qa_provider(&self.system, &self.filter), self.system.dim(), schedule);
        }
        let mut provider = |s: f64| -> Result<Op> {
            let d = eigendecompose(&self.system.hamiltonian(s))?;
            Ok(qa_generator_spectral(&self.system, s, &self.filter, &d))
        };
        evolve_path(&mut provider, self.system.dim(), schedule)
    }

    /// `W` applied to `|0⟩_{C′}|ψ⟩` on the augmented chain.
    pub fn apply(&self, w: &Op, input: &State, n: usize, m: usize) -> Result<State> {
        let aug = with_ancilla(input, 0, m, n);
        linalg::apply_local(&aug, n + 1, w, self.window.lo)
    }
}

/// Result of one seam sweep.
pub struct GlueOutcome {
    pub stage: GluingStage,
    /// Stage unitary applied to the input state.
    pub output: State,
    pub path_report: super::ancilla::EndpointReport,
}

/// Run the sweep for a seam, doubling steps when requested, and reduce the
/// window unitary to a unitary on `Λ`.
pub(crate) fn glue_state(
    split: &SplitSystem,
    engine: &SeamEngine,
    params: &EngineParams,
    input: &State,
    level: usize,
) -> Result<GlueOutcome> {
    let (n, m) = (split.n(), split.m);
    let target_aug = with_ancilla(&split.ground_h.state, 1, m, n);
    let probe = |w: &Op| -> Result<f64> { Ok(linalg::inner(&target_aug, &engine.apply(w, input, n, m)?).norm()) };

    let (w, steps, converged, history) = match params.steps {
        StepPolicy::Fixed(steps) => {
            let w = engine.sweep(Schedule { steps, order: params.order })?;
            let f = probe(&w)?;
            (w, steps, true, vec![(steps, f)])
        }
        StepPolicy::Converge(policy) => {
            let mut steps = policy.start_steps.max(1);
            let mut history = Vec::new();
            loop {
                let w = engine.sweep(Schedule { steps, order: params.order })?;
                let f = probe(&w)?;
                let done = history.last().is_some_and(|&(_, prev): &(usize, f64)| (f - prev).abs() < policy.tol);
                history.push((steps, f));
                if done || 2 * steps > policy.max_steps {
                    if !done {
                        log::warn!("seam sweep stopped at {steps} steps before reaching tolerance {:.1e}", policy.tol);
                    }
                    break (w, steps, done, history);
                }
                steps *= 2;
            }
        }
    };

    let local_m = m - engine.window.lo;
    let width = engine.window.width();
    let contraction = ancilla_block(&w, 1, 0, local_m, width);
    let unitary = linalg::polar_unitary(&contraction)?;

    let swept = engine.apply(&w, input, n, m)?;
    let host = ancilla_component(&swept, 1, m, n);
    let other = ancilla_component(&swept, 0, m, n);
    let weight = linalg::norm(&host).powi(2);
    let weight_zero = linalg::norm(&other).powi(2);
    if weight < 0.5 {
        return Err(Error::AncillaProjection { weight });
    }
    let omega = &split.ground_h.state;
    let projected_fidelity = linalg::inner(omega, &host).norm() / weight.sqrt();
    let trace_out_fidelity = linalg::inner(omega, &host).norm_sqr() + linalg::inner(omega, &other).norm_sqr();

    let output = linalg::apply_local(input, n, &unitary, engine.window.lo)?;
    let fidelity = linalg::inner(omega, &output).norm();

    let sweep_fidelity = history.last().map_or(0.0, |&(_, f)| f);
    let stage = GluingStage {
        level,
        block_size: m,
        seam: m,
        alpha: params.alpha.radius(),
        gamma: params.gamma,
        unitary,
        support: engine.window,
        fidelity_vs_exact: Some(fidelity),
        report: StageReport {
            ancilla_weight: weight,
            ancilla_weight_zero: weight_zero,
            projected_fidelity,
            trace_out_fidelity,
            sweep_fidelity,
            steps,
            converged,
            step_history: history,
            x_used: engine.path.x_used,
            kappa: engine.path.kappa(),
            delta_e: engine.path.delta_e,
        },
    };
    Ok(GlueOutcome {
        stage,
        output,
        path_report: engine.path.endpoints.clone(),
    })
}

/// Glue `|Ω_A⟩|Ω_B⟩` into an approximation of `|Ω_H⟩` with one seam sweep.
pub fn glue_once(split: &SplitSystem, params: &EngineParams) -> Result<GlueOutcome> {
    let engine = SeamEngine::new(split, params)?;
    glue_state(split, &engine, params, &split.ground_k(), 1)
}

/// One row of the generator truncation table.
#[derive(Clone, Debug, Serialize)]
pub struct TruncationRow {
    pub s: f64,
    /// `None` for the untruncated generator.
    pub alpha: Option<usize>,
    pub distance: f64,
}

fn check_alphas(alphas: &[Alpha]) -> Result<()> {
    let key = |a: &Alpha| a.radius().unwrap_or(usize::MAX);
    if alphas.windows(2).any(|w| key(&w[0]) >= key(&w[1])) {
        return Err(Error::InvalidArgument("truncation radii must be strictly ascending".into()));
    }
    if alphas.contains(&Alpha::Radius(0)) {
        return Err(Error::InvalidArgument("truncation radius must be at least 1".into()));
    }
    Ok(())
}

struct Truncations {
    full: AncillaSystem,
    windows: Vec<(Alpha, SupportInterval, AncillaSystem)>,
    filter: Filter,
    n: usize,
}

impl Truncations {
    fn new(split: &SplitSystem, gamma: f64, alphas: &[Alpha], kind: FilterKind) -> Result<Self> {
        check_alphas(alphas)?;
        let path = build_ancilla_path(split, None)?;
        let mut windows = Vec::new();
        for &alpha in alphas {
            let win = window(split.m, split.n(), alpha);
            windows.push((alpha, win, window_system(split, &path, win)?));
        }
        Ok(Self {
            full: path.system.clone(),
            windows,
            filter: make_filter(kind, gamma)?,
            n: split.n(),
        })
    }

    fn full_generator(&self, s: f64) -> Result<Op> {
        let d = eigendecompose(&self.full.hamiltonian(s))?;
        Ok(qa_generator_spectral(&self.full, s, &self.filter, &d))
    }

    /// `k_α(s)` embedded in the augmented chain.
    fn window_generator(&self, idx: usize, s: f64) -> Result<Op> {
        let (_, win, sys) = &self.windows[idx];
        let d = eigendecompose(&sys.hamiltonian(s))?;
        let k = qa_generator_spectral(sys, s, &self.filter, &d);
        embed_operator(&k, SupportInterval::new(win.lo, win.hi + 1, self.n + 1)?, self.n + 1)
    }
}

/// `‖k(s) − k_α(s)‖` for every `s` in the grid and every radius.
pub fn truncation_distance(split: &SplitSystem, s_grid: &[f64], gamma: f64, alphas: &[Alpha], kind: FilterKind) -> Result<Vec<TruncationRow>> {
    let t = Truncations::new(split, gamma, alphas, kind)?;
    let mut rows = Vec::new();
    for &s in s_grid {
        let k = t.full_generator(s)?;
        for (idx, (alpha, _, _)) in t.windows.iter().enumerate() {
            let ka = t.window_generator(idx, s)?;
            rows.push(TruncationRow {
                s,
                alpha: alpha.radius(),
                distance: linalg::op_norm(&(&k - &ka)),
            });
        }
    }
    Ok(rows)
}

/// Distance between the full and truncated sweep unitaries, next to the
/// discrete integral `Σ h‖k(s_j) − k_α(s_j)‖` over the same midpoint nodes.
#[derive(Clone, Debug, Serialize)]
pub struct UnitaryTruncationRow {
    pub alpha: Option<usize>,
    pub unitary_distance: f64,
    pub integral_bound: f64,
}

pub fn unitary_truncation_check(split: &SplitSystem, gamma: f64, alphas: &[Alpha], steps: usize, kind: FilterKind) -> Result<Vec<UnitaryTruncationRow>> {
    let t = Truncations::new(split, gamma, alphas, kind)?;
    let dim = 2usize << t.n;
    let h = 1.0 / steps.max(1) as f64;
    let mut full = linalg::identity(dim);
    let mut truncated = vec![linalg::identity(dim); t.windows.len()];
    let mut integrals = vec![0.0; t.windows.len()];
    for j in 0..steps.max(1) {
        let s = (j as f64 + 0.5) * h;
        let k = t.full_generator(s)?;
        full = &linalg::expm_i_hermitian(&k, h)? * &full;
        for idx in 0..t.windows.len() {
            let ka = t.window_generator(idx, s)?;
            integrals[idx] += h * linalg::op_norm(&(&k - &ka));
            truncated[idx] = &linalg::expm_i_hermitian(&ka, h)? * &truncated[idx];
        }
    }
    Ok(t
        .windows
        .iter()
        .enumerate()
        .map(|(idx, (alpha, _, _))| UnitaryTruncationRow {
            alpha: alpha.radius(),
            unitary_distance: linalg::op_norm(&(&full - &truncated[idx])),
            integral_bound: integrals[idx],
        })
        .collect())
}
