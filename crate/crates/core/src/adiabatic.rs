//! Adiabatic and quasi-adiabatic transport of ground states along gapped paths.
//!
//! Every generator here is returned as a Hermitian operator `G(s)` and the
//! flow is `dV/ds = i·G(s)·V`.

use serde::Serialize;

use crate::chain::{ChainFamily, Model};
use crate::error::{Error, Result};
use crate::filter::{Composite, Filter, FilterKind};
use crate::linalg::{self, c64, Mat, Op, State, ZERO};
use crate::oracle::{eigendecompose, mp_resolvent, EigenDecomposition, GAP_TOL};

/// A smooth family of Hamiltonians `H(s)`, `s ∈ [0, 1]`.
pub trait HamiltonianPath: Sync {
    fn dim(&self) -> usize;
    fn hamiltonian(&self, s: f64) -> Op;
    /// Analytic `dH/ds`.
    fn derivative(&self, s: f64) -> Op;
    /// Known lower bound on the gap along the path, if any.
    fn gap_floor(&self) -> Option<f64> {
        None
    }
}

/// `H(s) = (1 − s)·H0 + s·H1`.
#[derive(Clone, Debug)]
pub struct LinearPath {
    pub start: Op,
    pub end: Op,
    diff: Op,
}

impl LinearPath {
    pub fn new(start: Op, end: Op) -> Result<Self> {
        if start.nrows() != end.nrows() || start.ncols() != end.ncols() {
            return Err(Error::Dimension("path endpoints differ in size".into()));
        }
        linalg::ensure_hermitian(&start, 1e-12)?;
        linalg::ensure_hermitian(&end, 1e-12)?;
        let diff = &end - &start;
        Ok(Self { start, end, diff })
    }

    pub fn constant(h: Op) -> Result<Self> {
        Self::new(h.clone(), h)
    }

    /// Interpolate the transverse field of `model` from `field0` to `field1`.
    pub fn field_ramp(model: &Model, n: usize, field0: f64, field1: f64, cap: usize) -> Result<Self> {
        let a = model.with_field(field0).build(n, cap)?.unshifted();
        let b = model.with_field(field1).build(n, cap)?.unshifted();
        Self::new(a, b)
    }
}

impl HamiltonianPath for LinearPath {
    fn dim(&self) -> usize {
        self.start.nrows()
    }

    fn hamiltonian(&self, s: f64) -> Op {
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            self.start[(i, j)] * (1.0 - s) + self.end[(i, j)] * s
        })
    }

    fn derivative(&self, _s: f64) -> Op {
        self.diff.clone()
    }
}

/// Largest deviation between the analytic derivative and a central difference.
pub fn derivative_defect(path: &dyn HamiltonianPath, s: f64, step: f64) -> f64 {
    let lo = (s - step).max(0.0);
    let hi = (s + step).min(1.0);
    let fd = linalg::scale_real(&(path.hamiltonian(hi) - path.hamiltonian(lo)), 1.0 / (hi - lo));
    linalg::max_abs_diff(&fd, &path.derivative(s))
}

fn require_gap(decomp: &EigenDecomposition, s: f64) -> Result<()> {
    let gap = decomp.gap();
    if gap < GAP_TOL {
        return Err(Error::GapCollapse { s, gap });
    }
    Ok(())
}

/// Hermitian `G` with `iG = −[P, P′] = R·H′·P − P·H′·R`, where `R` is the
/// Moore–Penrose resolvent at the ground energy.
pub fn exact_adiabatic_generator(path: &dyn HamiltonianPath, s: f64, decomp: &EigenDecomposition) -> Result<Op> {
    require_gap(decomp, s)?;
    let dh = path.derivative(s);
    exact_generator_from(&dh, decomp, s)
}

pub(crate) fn exact_generator_from(dh: &Op, decomp: &EigenDecomposition, s: f64) -> Result<Op> {
    require_gap(decomp, s)?;
    // In the eigenbasis R H′ P has entries A_j0/(Ω − E_j) in column 0.
    let a = decomp.to_eigenbasis(dh);
    let dim = decomp.dim();
    let e0 = decomp.ground_energy();
    let mut g = linalg::zeros(dim);
    for j in 1..dim {
        let c = a[(j, 0)] / (e0 - decomp.energies[j]);
        // −i(R H′ P − P H′ R)
        g[(j, 0)] = c * c64::new(0.0, -1.0);
        g[(0, j)] = c.conj() * c64::new(0.0, 1.0);
    }
    Ok(decomp.from_eigenbasis(&g))
}

/// The anti-Hermitian operator `−[P, P′]` built directly from the resolvent.
pub fn exact_adiabatic_commutator(path: &dyn HamiltonianPath, s: f64, decomp: &EigenDecomposition) -> Result<Op> {
    require_gap(decomp, s)?;
    let r = mp_resolvent(decomp, decomp.ground_energy())?;
    let p = crate::chain::projector(&decomp.ground_state());
    let dh = path.derivative(s);
    Ok(&r * &dh * &p - &p * &dh * &r)
}

/// Quasi-adiabatic generator `L_jk = w(E_j − E_k)·(H′)_jk` in the eigenbasis.
pub fn qa_generator_spectral(path: &dyn HamiltonianPath, s: f64, filter: &Filter, decomp: &EigenDecomposition) -> Op {
    qa_generator_from(&path.derivative(s), filter, decomp)
}

pub(crate) fn qa_generator_from(dh: &Op, filter: &Filter, decomp: &EigenDecomposition) -> Op {
    let mut a = decomp.to_eigenbasis(dh);
    let e = &decomp.energies;
    let dim = decomp.dim();
    for k in 0..dim {
        a[(k, k)] = ZERO;
        for j in k + 1..dim {
            let g = filter.kernel_real(e[j] - e[k]);
            // w(ω) = i·g(ω) and w(−ω) = −i·g(ω).
            a[(j, k)] *= c64::new(0.0, g);
            a[(k, j)] *= c64::new(0.0, -g);
        }
    }
    let l = decomp.from_eigenbasis(&a);
    symmetrize(&l)
}

fn symmetrize(a: &Op) -> Op {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Quasi-adiabatic generator by direct time-domain quadrature.
///
/// Exchanging the order of integration gives
/// `L = ∫_0^T X(u)·(τ_u(H′) − τ_{−u}(H′)) du` with tail mass
/// `X(u) = ∫_u^T χ(t) dt`. The outer integral is composite Simpson on
/// `n_nodes` points; `X` is accumulated panel by panel with 8-point
/// Gauss–Legendre. The neglected tail is bounded by
/// [`quadrature_tail_estimate`].
pub fn qa_generator_quadrature(path: &dyn HamiltonianPath, s: f64, filter: &Filter, t_cut: f64, n_nodes: usize) -> Result<Op> {
    if !(t_cut > 0.0) || n_nodes < 3 {
        return Err(Error::InvalidArgument(format!("bad quadrature parameters t_cut={t_cut}, n_nodes={n_nodes}")));
    }
    let decomp = eigendecompose(&path.hamiltonian(s))?;
    let a = decomp.to_eigenbasis(&path.derivative(s));
    let nodes = if n_nodes.is_multiple_of(2) { n_nodes + 1 } else { n_nodes };
    let h = t_cut / (nodes - 1) as f64;

    let mut tail = vec![0.0; nodes];
    for k in (0..nodes - 1).rev() {
        let lo = k as f64 * h;
        let piece = Composite::new(lo, lo + h, 1, 8).integrate(|t| filter.chi(t));
        tail[k] = tail[k + 1] + piece;
    }

    let e = &decomp.energies;
    let dim = decomp.dim();
    // Σ_k c_k X(u_k) sin(u_k ω) for every distinct pair, then L_jk = 2i·S_jk·A_jk.
    let mut acc = vec![0.0; dim * dim];
    for k in 0..nodes {
        let weight = simpson_weight(k, nodes) * h * tail[k];
        if weight == 0.0 {
            continue;
        }
        let u = k as f64 * h;
        for col in 0..dim {
            for row in col + 1..dim {
                acc[row * dim + col] += weight * (u * (e[row] - e[col])).sin();
            }
        }
    }
    let mut l = linalg::zeros(dim);
    for col in 0..dim {
        for row in col + 1..dim {
            let sj = acc[row * dim + col];
            l[(row, col)] = a[(row, col)] * c64::new(0.0, 2.0 * sj);
            l[(col, row)] = a[(col, row)] * c64::new(0.0, -2.0 * sj);
        }
    }
    Ok(symmetrize(&decomp.from_eigenbasis(&l)))
}

/// Composite Simpson coefficient of node `k` out of an odd `nodes`, without the `h`.
pub fn simpson_weight(k: usize, nodes: usize) -> f64 {
    if k == 0 || k == nodes - 1 {
        1.0 / 3.0
    } else if k % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Bound on `‖L_T − L‖/‖H′‖` from cutting the time integral at `T`:
/// `2∫_T^∞ X(u) du ≤ 2∫_T^∞ t·χ(t) dt`.
pub fn quadrature_tail_estimate(filter: &Filter, t_cut: f64) -> f64 {
    match filter.kind {
        FilterKind::Gaussian => {
            let g = filter.gamma;
            2.0 * g * (-(t_cut * t_cut) / (2.0 * g * g)).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
        FilterKind::CompactBump => {
            let rule = Composite::new(t_cut, 4.0 * t_cut, 256, 8);
            2.0 * rule.integrate(|t| t * filter.chi(t).abs())
        }
    }
}

/// Number of Simpson nodes resolving oscillations up to `omega_max` over `[0, T]`.
pub fn default_quadrature_nodes(t_cut: f64, omega_max: f64) -> usize {
    let n = ((t_cut * omega_max.max(1.0)) / 0.02).ceil() as usize;
    (n.max(64) | 1).min(2_000_001)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOrder {
    Midpoint,
    Richardson,
}

#[derive(Clone, Copy, Debug)]
pub struct Schedule {
    pub steps: usize,
    pub order: StepOrder,
}

fn midpoint_product(generator: &mut dyn FnMut(f64) -> Result<Op>, dim: usize, steps: usize) -> Result<Op> {
    let h = 1.0 / steps as f64;
    let mut u = linalg::identity(dim);
    for k in 0..steps {
        let s = (k as f64 + 0.5) * h;
        let g = generator(s)?;
        if g.nrows() != dim || g.ncols() != dim {
            return Err(Error::Dimension(format!("generator at s={s} has size {}", g.nrows())));
        }
        let scale = linalg::frobenius(&g).max(1.0);
        if linalg::hermitian_deviation(&g) > 1e-9 * scale {
            return Err(Error::NotHermitian {
                deviation: linalg::hermitian_deviation(&g),
            });
        }
        let step = linalg::expm_i_hermitian(&symmetrize(&g), h)?;
        u = &step * &u;
    }
    Ok(u)
}

/// Time-ordered `T exp(i∫_0^1 G(s) ds)` by the exponential midpoint rule, with
/// optional Richardson extrapolation from `steps` and `2·steps` followed by
/// re-unitarization through the polar factor.
pub fn evolve_path(generator: &mut dyn FnMut(f64) -> Result<Op>, dim: usize, schedule: Schedule) -> Result<Op> {
    if schedule.steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    let coarse = midpoint_product(generator, dim, schedule.steps)?;
    match schedule.order {
        StepOrder::Midpoint => Ok(coarse),
        StepOrder::Richardson => {
            let fine = midpoint_product(generator, dim, 2 * schedule.steps)?;
            let mixed = Mat::from_fn(dim, dim, |i, j| (fine[(i, j)] * 4.0 - coarse[(i, j)]) / 3.0);
            linalg::polar_unitary(&mixed)
        }
    }
}

/// Step-doubling policy: stop once the tracked fidelity moves by less than `tol`.
#[derive(Clone, Copy, Debug)]
pub struct Convergence {
    pub start_steps: usize,
    pub max_steps: usize,
    pub tol: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            start_steps: 8,
            max_steps: 1024,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergedEvolution {
    pub unitary: Op,
    pub steps: usize,
    /// `(steps, |⟨target|U|initial⟩|)` for every attempted resolution.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
}

pub fn evolve_converged(
    generator: &mut dyn FnMut(f64) -> Result<Op>,
    dim: usize,
    order: StepOrder,
    policy: Convergence,
    initial: &State,
    target: &State,
) -> Result<ConvergedEvolution> {
    let mut steps = policy.start_steps.max(1);
    let mut history = Vec::new();
    let mut last: Option<f64> = None;
    loop {
        let u = evolve_path(generator, dim, Schedule { steps, order })?;
        let fid = linalg::inner(target, &(&u * initial)).norm();
        history.push((steps, fid));
        let done = last.is_some_and(|prev| (fid - prev).abs() < policy.tol);
        if done || 2 * steps > policy.max_steps {
            if !done {
                log::warn!("step doubling stopped at {steps} steps before reaching tolerance {:.1e}", policy.tol);
            }
            return Ok(ConvergedEvolution {
                unitary: u,
                steps,
                history,
                converged: done,
            });
        }
        last = Some(fid);
        steps *= 2;
    }
}

/// Generator closures for a path.
pub fn qa_provider<'a>(path: &'a dyn HamiltonianPath, filter: &'a Filter) -> impl FnMut(f64) -> Result<Op> + 'a {
    move |s| {
        let decomp = eigendecompose(&path.hamiltonian(s))?;
        require_gap(&decomp, s)?;
        Ok(qa_generator_spectral(path, s, filter, &decomp))
    }
}

pub fn exact_provider(path: &dyn HamiltonianPath) -> impl FnMut(f64) -> Result<Op> + '_ {
    move |s| {
        let decomp = eigendecompose(&path.hamiltonian(s))?;
        exact_adiabatic_generator(path, s, &decomp)
    }
}

/// `Q = Σ χ̂(E_j − Ω)|E_j⟩⟨E_j|` and `max_{j≥1} |χ̂(E_j − Ω)|`.
pub fn q_projector(decomp: &EigenDecomposition, filter: &Filter) -> (Op, f64) {
    let e0 = decomp.ground_energy();
    let q = crate::oracle::spectral_function(decomp, |e| c64::new(filter.chi_hat(e - e0), 0.0));
    let dist = decomp.energies[1..]
        .iter()
        .map(|&e| filter.chi_hat(e - e0).abs())
        .fold(0.0, f64::max);
    (q, dist)
}

/// Spectral factor `f = max_{j≥1} |χ̂(E_j − Ω)/(E_j − Ω)|`.
pub fn spectral_leak(decomp: &EigenDecomposition, filter: &Filter) -> f64 {
    let e0 = decomp.ground_energy();
    decomp.energies[1..]
        .iter()
        .map(|&e| (filter.chi_hat(e - e0) / (e - e0)).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorCertificate {
    pub eta_star: f64,
    pub f_star: f64,
    pub bound: f64,
    pub gamma: f64,
    /// Smallest gap on the sample grid.
    pub delta_gap: f64,
    /// Gaussian tail estimate `e^{−γ²Δ²/2}/Δ` for the transform actually used.
    pub gaussian_f_estimate: Option<f64>,
    /// The same estimate with the stated transform `e^{−2γ²Δ²}/Δ`.
    pub stated_f_estimate: Option<f64>,
}

/// `η* = max_s ‖(I − P)H′|Ω⟩‖`, `f* = max_s f(s)` and `bound = η*·f*`.
pub fn error_certificate(path: &dyn HamiltonianPath, filter: &Filter, grid: &[f64]) -> Result<ErrorCertificate> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty sample grid".into()));
    }
    let mut eta_star = 0.0f64;
    let mut f_star = 0.0f64;
    let mut delta = f64::INFINITY;
    for &s in grid {
        let decomp = eigendecompose(&path.hamiltonian(s))?;
        require_gap(&decomp, s)?;
        let a = decomp.to_eigenbasis(&path.derivative(s));
        let eta = (1..decomp.dim()).map(|j| a[(j, 0)].norm_sqr()).sum::<f64>().sqrt();
        eta_star = eta_star.max(eta);
        f_star = f_star.max(spectral_leak(&decomp, filter));
        delta = delta.min(decomp.gap());
    }
    let (gaussian_f_estimate, stated_f_estimate) = match filter.kind {
        FilterKind::Gaussian => {
            let g = filter.gamma;
            (
                Some((-0.5 * g * g * delta * delta).exp() / delta),
                Some((-2.0 * g * g * delta * delta).exp() / delta),
            )
        }
        FilterKind::CompactBump => (None, None),
    };
    Ok(ErrorCertificate {
        eta_star,
        f_star,
        bound: eta_star * f_star,
        gamma: filter.gamma,
        delta_gap: delta,
        gaussian_f_estimate,
        stated_f_estimate,
    })
}

/// Evenly spaced grid with `points` samples on `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|k| k as f64 / (points - 1) as f64).collect(),
    }
}

/// Transport the ground state of `H(0)` with the exact generator at high
/// resolution. The result is the reference `|Ω(1)⟩` with the parallel-transport
/// phase that the quasi-adiabatic flow is compared against.
pub fn transported_reference(path: &dyn HamiltonianPath, steps: usize) -> Result<State> {
    let start = eigendecompose(&path.hamiltonian(0.0))?.ground_state();
    let u = evolve_path(
        &mut exact_provider(path),
        path.dim(),
        Schedule {
            steps,
            order: StepOrder::Richardson,
        },
    )?;
    Ok(&u * &start)
}
