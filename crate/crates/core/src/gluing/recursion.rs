use serde::Serialize;

use super::split::split;
use super::stage::{glue_state, EngineParams, SeamEngine};
use super::{GluingStage, LocalCircuit};
use crate::chain::{ChainFamily, SupportInterval};
use crate::error::{Error, Result};
use crate::linalg::{self, State};
use crate::locality::LrConstants;
use crate::oracle::ground_and_gap;

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonBudget {
    /// `ε(γ) = e^{−2γ²x²ΔE²}/(xΔE) + γΔE·e^{−κγ/v}`.
    pub epsilon_one: f64,
    /// `(n/m)·ε(γ)`.
    pub total: f64,
    /// Smallest `γ ≥ v/κ` with `total ≤ target`, when a target is given.
    pub gamma_required: Option<f64>,
}

fn epsilon(gamma: f64, x: f64, delta_e: f64, lr: &LrConstants) -> f64 {
    let xd = x * delta_e;
    (-2.0 * gamma * gamma * xd * xd).exp() / xd + gamma * delta_e * (-lr.kappa_lr * gamma / lr.v).exp()
}

/// Per-seam error `ε(γ)` and its accumulation over `n/m` seams.
///
/// On `[v/κ, ∞)` both terms decrease in `γ`, so the required width is found by
/// bracketing and bisection on that ray.
pub fn epsilon_budget(gamma: f64, x: f64, delta_e: f64, n: usize, m: usize, lr: &LrConstants, target: Option<f64>) -> Result<EpsilonBudget> {
    if !(gamma > 0.0 && x > 0.0 && x <= 1.0 && delta_e > 0.0 && lr.v > 0.0 && lr.kappa_lr > 0.0 && m > 0 && n >= m) {
        return Err(Error::InvalidArgument("epsilon budget needs positive inputs and 0 < |x| ≤ 1".into()));
    }
    let ratio = n as f64 / m as f64;
    let total_at = |g: f64| ratio * epsilon(g, x, delta_e, lr);
    let epsilon_one = epsilon(gamma, x, delta_e, lr);
    let gamma_required = match target {
        None => None,
        Some(t) if !(t > 0.0) => return Err(Error::InvalidArgument(format!("target {t} must be positive"))),
        Some(t) => {
            let mut lo = lr.v / lr.kappa_lr;
            if total_at(lo) <= t {
                Some(lo)
            } else {
                let mut hi = 2.0 * lo;
                while total_at(hi) > t {
                    lo = hi;
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return Err(Error::InvalidArgument(format!("target {t} is not reachable")));
                    }
                }
                while hi - lo > 1e-12 * hi {
                    let mid = 0.5 * (lo + hi);
                    if total_at(mid) <= t {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(hi)
            }
        }
    };
    Ok(EpsilonBudget {
        epsilon_one,
        total: ratio * epsilon_one,
        gamma_required,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingBudget {
    /// Smallest `|x|` over the levels.
    pub x: f64,
    /// Smallest `ΔE` over the levels.
    pub delta_e: f64,
    pub epsilon_one: f64,
    /// `(n/m)·ε`.
    pub total: f64,
    /// `e_1 = ε`, `e_{k+1} = 2·e_k + ε`.
    pub level_estimates: Vec<f64>,
}

/// Build `|Ω_n⟩ ≈ W|Ω_m⟩^{⊗ n/m}` by doubling: at level `k` the blocks have
/// `b = m·2^{k−1}` sites and every pair is glued at its seam.
///
/// All stages of a level share one unitary because the family is translation
/// invariant; each stage records its own fidelity against the exact ground
/// state of its `2b`-site sub-chain.
pub fn iterate_gluing(family: &dyn ChainFamily, m: usize, n: usize, params: &EngineParams, lr: &LrConstants, cap: usize) -> Result<LocalCircuit> {
    if m < 2 || n <= m || !n.is_multiple_of(m) || !(n / m).is_power_of_two() {
        return Err(Error::InvalidArgument(format!("n = {n} must be m·2^k with k ≥ 1 and m = {m} ≥ 2")));
    }
    crate::chain::check_cap(n, cap)?;
    let copies = n / m;
    let levels = copies.trailing_zeros() as usize;
    let base = ground_and_gap(&family.build(m, cap)?.dense)?.require_gapped()?.state;

    let mut circuit = LocalCircuit {
        m,
        copies,
        base_block_state: base.clone(),
        stages: Vec::new(),
        budget: None,
    };
    let mut blocks: Vec<State> = vec![base; copies];
    let mut xs = Vec::new();
    let mut gaps = Vec::new();

    for level in 1..=levels {
        let b = m << (level - 1);
        let fail = |e: Error, circuit: &LocalCircuit| Error::Stage {
            index: circuit.stages.len(),
            completed: circuit.stages.len(),
            source: Box::new(e),
            prefix: Box::new(circuit.clone()),
        };
        let engine = match split(family, 2 * b, b, cap).and_then(|s| SeamEngine::new(&s, params).map(|e| (s, e))) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, &circuit)),
        };
        let (sub, engine) = engine;
        xs.push(engine.path.x_used);
        gaps.push(engine.path.delta_e);
        let mut next = Vec::with_capacity(blocks.len() / 2);
        let mut shared: Option<GluingStage> = None;
        for (j, pair) in blocks.chunks(2).enumerate() {
            let input = linalg::kron_state(&pair[0], &pair[1]);
            let outcome = match &shared {
                None => glue_state(&sub, &engine, params, &input, level),
                Some(first) => reuse_stage(&sub, first, &input),
            };
            let outcome = match outcome {
                Ok(o) => o,
                Err(e) => return Err(fail(e, &circuit)),
            };
            let offset = 2 * j * b;
            let mut stage = outcome.stage.clone();
            stage.seam = offset + b;
            stage.block_size = b;
            stage.support = SupportInterval {
                lo: offset + outcome.stage.support.lo,
                hi: offset + outcome.stage.support.hi,
            };
            if shared.is_none() {
                shared = Some(outcome.stage);
            }
            log::debug!(
                "level {level} seam {} fidelity {:?}",
                stage.seam,
                stage.fidelity_vs_exact
            );
            circuit.stages.push(stage);
            next.push(outcome.output);
        }
        blocks = next;
    }

    let x = xs.iter().copied().fold(1.0, f64::min);
    let delta_e = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = epsilon_budget(params.gamma, x, delta_e, n, m, lr, None)?;
    let mut level_estimates = Vec::with_capacity(levels);
    let mut acc = 0.0;
    for _ in 0..levels {
        acc = 2.0 * acc + eps.epsilon_one;
        level_estimates.push(acc);
    }
    circuit.budget = Some(GluingBudget {
        x,
        delta_e,
        epsilon_one: eps.epsilon_one,
        total: eps.total,
        level_estimates,
    });
    Ok(circuit)
}

/// Apply an already computed stage unitary to another pair of blocks.
fn reuse_stage(sub: &super::SplitSystem, first: &GluingStage, input: &State) -> Result<super::GlueOutcome> {
    let output = linalg::apply_local(input, sub.n(), &first.unitary, first.support.lo)?;
    let mut stage = first.clone();
    stage.fidelity_vs_exact = Some(linalg::inner(&sub.ground_h.state, &output).norm());
    Ok(super::GlueOutcome {
        stage,
        output,
        path_report: super::ancilla::EndpointReport {
            start_fidelity: f64::NAN,
            end_fidelity: f64::NAN,
            flipped: true,
        },
    })
}
