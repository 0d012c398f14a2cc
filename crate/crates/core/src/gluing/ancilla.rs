use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use super::split::SplitSystem;
use crate::adiabatic::HamiltonianPath;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, Mat, Op, State, ONE, ZERO};
use crate::oracle::eigendecompose;

/// Tolerance of the endpoint checks on `M(0)` and `M(π/2)`.
pub const ENDPOINT_TOL: f64 = 1e-8;

/// `c ⊗ x` with the single-qubit operator `c` inserted at position `m` of an
/// `n`-site chain operator `x`, giving an operator on `n + 1` sites.
pub fn ancilla_kron(c: &Op, x: &Op, m: usize, n: usize) -> Op {
    let right = 1usize << (n - m);
    let dim = 2usize << n;
    Mat::from_fn(dim, dim, |i, j| {
        let (ia, ic, ib) = (i / (2 * right), (i / right) % 2, i % right);
        let (ja, jc, jb) = (j / (2 * right), (j / right) % 2, j % right);
        let cv = c[(ic, jc)];
        if cv == ZERO {
            ZERO
        } else {
            cv * x[(ia * right + ib, ja * right + jb)]
        }
    })
}

/// Insert the ancilla basis state `|a⟩` at position `m` of a chain state.
pub fn with_ancilla(psi: &State, a: usize, m: usize, n: usize) -> State {
    let right = 1usize << (n - m);
    crate::linalg::Col::from_fn(2usize << n, |i| {
        let (ia, ic, ib) = (i / (2 * right), (i / right) % 2, i % right);
        if ic == a {
            psi[ia * right + ib]
        } else {
            ZERO
        }
    })
}

/// Chain component `⟨a|_{C′} Φ` of an augmented state.
pub fn ancilla_component(phi: &State, a: usize, m: usize, n: usize) -> State {
    let right = 1usize << (n - m);
    crate::linalg::Col::from_fn(1usize << n, |i| {
        let (ia, ib) = (i / right, i % right);
        phi[(ia * 2 + a) * right + ib]
    })
}

/// Chain block `⟨a|U|b⟩` of an augmented operator.
pub fn ancilla_block(u: &Op, a: usize, b: usize, m: usize, n: usize) -> Op {
    let right = 1usize << (n - m);
    let dim = 1usize << n;
    Mat::from_fn(dim, dim, |i, j| {
        let (ia, ib) = (i / right, i % right);
        let (ja, jb) = (j / right, j % right);
        u[((ia * 2 + a) * right + ib, (ja * 2 + b) * right + jb)]
    })
}

/// `|v(θ)⟩ = sin θ|0⟩ − cos θ|1⟩`.
pub fn polarizer_vector(theta: f64) -> [f64; 2] {
    [theta.sin(), -theta.cos()]
}

/// `V(θ) = |v(θ)⟩⟨v(θ)|`.
pub fn polarizer(theta: f64) -> Op {
    let v = polarizer_vector(theta);
    Mat::from_fn(2, 2, |i, j| c64::new(v[i] * v[j], 0.0))
}

/// `dV/dθ`.
pub fn polarizer_derivative(theta: f64) -> Op {
    let v = polarizer_vector(theta);
    let dv = [theta.cos(), theta.sin()];
    Mat::from_fn(2, 2, |i, j| c64::new(dv[i] * v[j] + v[i] * dv[j], 0.0))
}

/// The 2×2 matrix of `V(θ)` on `{|0⟩|Ω_H⟩, |1⟩|Ω_K⟩}` and its eigenvalue gap
/// `Δ(θ) = √(1 − 4 sin²θ cos²θ (1 − |x|²))`.
pub fn effective_two_level(x: c64, theta: f64) -> Result<(Op, f64)> {
    if x.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!("overlap |x| = {} exceeds 1", x.norm())));
    }
    let (s, c) = theta.sin_cos();
    let mut v = linalg::zeros(2);
    v[(0, 0)] = c64::new(s * s, 0.0);
    v[(0, 1)] = -x.conj() * (s * c);
    v[(1, 0)] = -x * (s * c);
    v[(1, 1)] = c64::new(c * c, 0.0);
    let x2 = x.norm_sqr().min(1.0);
    let gap = (1.0 - 4.0 * s * s * c * c * (1.0 - x2)).max(0.0).sqrt();
    Ok((v, gap))
}

/// `M(s) = I ⊗ K + P_H ⊗ H_I + κ·V(πs/2) ⊗ I` on a chain of `n` sites with
/// the ancilla at position `m`.
///
/// `P_H` projects the ancilla onto the label hosting `H`: `|1⟩` when
/// `flipped`, otherwise `|0⟩`.
#[derive(Clone, Debug)]
pub struct AncillaSystem {
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub flipped: bool,
    base: Op,
}

impl AncillaSystem {
    /// `k` and `h_i` are chain operators on `n` sites; `h_i` includes `δ`.
    pub fn new(k: &Op, h_i: &Op, m: usize, n: usize, kappa: f64, flipped: bool) -> Self {
        let host = if flipped { 1 } else { 0 };
        let p_h = Mat::from_fn(2, 2, |i, j| if i == host && j == host { ONE } else { ZERO });
        let base = ancilla_kron(&linalg::identity(2), k, m, n) + ancilla_kron(&p_h, h_i, m, n);
        Self {
            n,
            m,
            kappa,
            flipped,
            base,
        }
    }

    /// `L = M − κV`.
    pub fn l(&self) -> &Op {
        &self.base
    }

    pub fn host_label(&self) -> usize {
        usize::from(self.flipped)
    }

    fn add_ancilla_term(&self, target: &mut Op, c: &Op) {
        let right = 1usize << (self.n - self.m);
        let left = 1usize << self.m;
        for a in 0..left {
            for b in 0..right {
                for (ci, cj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let i = (a * 2 + ci) * right + b;
                    let j = (a * 2 + cj) * right + b;
                    target[(i, j)] += c[(ci, cj)];
                }
            }
        }
    }

    pub fn at_theta(&self, theta: f64) -> Op {
        let mut out = self.base.clone();
        self.add_ancilla_term(&mut out, &linalg::scale_real(&polarizer(theta), self.kappa));
        out
    }
}

impl HamiltonianPath for AncillaSystem {
    fn dim(&self) -> usize {
        2usize << self.n
    }

    fn hamiltonian(&self, s: f64) -> Op {
        self.at_theta(FRAC_PI_2 * s)
    }

    fn derivative(&self, s: f64) -> Op {
        let mut out = linalg::zeros(self.dim());
        let c = linalg::scale_real(&polarizer_derivative(FRAC_PI_2 * s), FRAC_PI_2 * self.kappa);
        self.add_ancilla_term(&mut out, &c);
        out
    }
}

/// Ancilla-augmented path for a split chain, with validated orientation.
#[derive(Clone, Debug)]
pub struct AncillaPath {
    pub system: AncillaSystem,
    pub delta_e: f64,
    /// `|x|` used for gap accounting and filter-width selection.
    pub x_used: f64,
    /// Exact `⟨Ω_K|Ω_H⟩`.
    pub overlap: c64,
    pub theta_grid: Vec<f64>,
    pub endpoints: EndpointReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct EndpointReport {
    /// Weight of `|0⟩_{C′}|Ω_K⟩` in the ground state of `M(0)`.
    pub start_fidelity: f64,
    /// Weight of `|1⟩_{C′}|Ω_H⟩` in the ground state of `M(π/2)`.
    pub end_fidelity: f64,
    pub flipped: bool,
}

impl AncillaPath {
    pub fn kappa(&self) -> f64 {
        self.system.kappa
    }

    pub fn m_of_theta(&self, theta: f64) -> Op {
        self.system.at_theta(theta)
    }
}

fn endpoint_weights(system: &AncillaSystem, split: &SplitSystem) -> Result<(f64, f64)> {
    let (n, m) = (split.n(), split.m);
    let start_want = with_ancilla(&split.ground_k(), 0, m, n);
    let end_want = with_ancilla(&split.ground_h.state, 1, m, n);
    let g0 = eigendecompose(&system.at_theta(0.0))?.ground_state();
    let g1 = eigendecompose(&system.at_theta(FRAC_PI_2))?.ground_state();
    Ok((linalg::inner(&start_want, &g0).norm_sqr(), linalg::inner(&end_want, &g1).norm_sqr()))
}

/// Build `M(θ) = L + κV(θ) ⊗ I` with `κ = ΔE/4` and check that the sweep runs
/// from `|0⟩|Ω_A⟩|Ω_B⟩` at `θ = 0` to `|1⟩|Ω_H⟩` at `θ = π/2`.
///
/// The literal operator `I ⊗ K + ((I + σᶻ)/2) ⊗ H_I` puts `H` in the `|0⟩`
/// block, which makes `|0⟩|Ω_H⟩` the ground state of `M(0)`. The ancilla labels
/// are swapped when that orientation fails the endpoint checks.
pub fn build_ancilla_path(split: &SplitSystem, x: Option<f64>) -> Result<AncillaPath> {
    let (n, m) = (split.n(), split.m);
    let delta_e = split.delta_e();
    let kappa = delta_e / 4.0;
    let h_i = split.h_i_full()?;
    let overlap = split.overlap();
    let x_used = x.unwrap_or_else(|| overlap.norm());
    if !(x_used > 0.0 && x_used <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("overlap {x_used} must lie in (0, 1]")));
    }

    let mut last = (0.0, 0.0);
    for flipped in [false, true] {
        let system = AncillaSystem::new(&split.k, &h_i, m, n, kappa, flipped);
        let (start, end) = endpoint_weights(&system, split)?;
        last = (start, end);
        if start >= 1.0 - ENDPOINT_TOL && end >= 1.0 - ENDPOINT_TOL {
            if flipped {
                log::debug!("ancilla labels swapped so that M(0) starts in |0>|Ω_K>");
            }
            return Ok(AncillaPath {
                system,
                delta_e,
                x_used,
                overlap,
                theta_grid: (0..=16).map(|k| FRAC_PI_2 * k as f64 / 16.0).collect(),
                endpoints: EndpointReport {
                    start_fidelity: start,
                    end_fidelity: end,
                    flipped,
                },
            });
        }
    }
    let (start, end) = last;
    if start < 1.0 - ENDPOINT_TOL {
        Err(Error::Endpoint {
            endpoint: "theta = 0",
            detail: format!("ground state of M(0) has weight {start:.10} on |0>|Ω_A>|Ω_B>"),
        })
    } else {
        Err(Error::Endpoint {
            endpoint: "theta = pi/2",
            detail: format!("ground state of M(pi/2) has weight {end:.10} on |1>|Ω_H>"),
        })
    }
}
