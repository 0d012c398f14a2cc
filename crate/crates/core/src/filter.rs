//! Filter functions `χ_γ` and their frequency transforms.
//!
//! The time-domain function is treated as ground truth. For the Gaussian the
//! transform is tabulated once by Gauss–Legendre quadrature of `χ_1` and rescaled
//! (`χ̂_γ(ω) = χ̂_1(γω)`); lookups use cubic Hermite interpolation with
//! quadrature-computed derivatives. The compact bump is defined in frequency and
//! its time-domain function is obtained by quadrature instead.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::c64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    #[default]
    Gaussian,
    CompactBump,
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FilterKind::Gaussian => "gaussian",
            FilterKind::CompactBump => "compact_bump",
        })
    }
}

/// Fixed composite Gauss–Legendre rule on `[a, b]`.
#[derive(Clone, Debug)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for &(x, w) in rule.as_node_weight_pairs() {
                nodes.push(lo + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Frequency range (in units of `1/γ`) covered by the Gaussian table.
const TABLE_MAX: f64 = 9.0;
/// Table spacing in units of `1/γ`.
const TABLE_STEP: f64 = 0.01;
/// Below this `γ|ω|` the kernel uses the moment series.
const SERIES_CUTOFF: f64 = 0.05;

struct GaussianTable {
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Even moments `∫ t^k χ_1(t) dt` for k = 2, 4, 6.
    moments: [f64; 3],
}

fn gaussian_unit(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn gaussian_table() -> &'static GaussianTable {
    static TABLE: OnceLock<GaussianTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rule = Composite::new(0.0, 12.0, 48, 16);
        let weighted: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| 2.0 * w * gaussian_unit(t))
            .collect();
        let count = (TABLE_MAX / TABLE_STEP).round() as usize + 1;
        let mut values = Vec::with_capacity(count);
        let mut slopes = Vec::with_capacity(count);
        for k in 0..count {
            let omega = k as f64 * TABLE_STEP;
            let (mut v, mut d) = (0.0, 0.0);
            for (&t, &w) in rule.nodes.iter().zip(&weighted) {
                let (sin, cos) = (omega * t).sin_cos();
                v += w * cos;
                d -= w * t * sin;
            }
            values.push(v);
            slopes.push(d);
        }
        let moment = |k: i32| rule.nodes.iter().zip(&weighted).map(|(&t, &w)| w * t.powi(k)).sum::<f64>();
        GaussianTable {
            values,
            slopes,
            moments: [moment(2), moment(4), moment(6)],
        }
    })
}

impl GaussianTable {
    /// `χ̂_1(x)` for `x ≥ 0`.
    fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let pos = x / TABLE_STEP;
        if pos >= last as f64 {
            return 0.0;
        }
        let k = pos.floor() as usize;
        let u = pos - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.slopes[k] * TABLE_STEP, self.slopes[k + 1] * TABLE_STEP);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * d1
    }
}

/// An even, real, normalized cutoff function `χ_γ` with transform `χ̂_γ`.
#[derive(Clone, Debug)]
pub struct Filter {
    pub kind: FilterKind,
    pub gamma: f64,
    bump_rule: Option<Composite>,
}

pub fn make_filter(kind: FilterKind, gamma: f64) -> Result<Filter> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("filter width must be positive, got {gamma}")));
    }
    let bump_rule = match kind {
        FilterKind::Gaussian => {
            gaussian_table();
            None
        }
        FilterKind::CompactBump => Some(Composite::new(0.0, gamma, 64, 16)),
    };
    Ok(Filter { kind, gamma, bump_rule })
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let u2 = u * u;
    (-u2 / (1.0 - u2)).exp()
}

impl Filter {
    pub fn chi(&self, t: f64) -> f64 {
        match self.kind {
            FilterKind::Gaussian => gaussian_unit(t / self.gamma) / self.gamma,
            FilterKind::CompactBump => {
                let rule = self.bump_rule.as_ref().unwrap();
                let g = self.gamma;
                if (g * t).abs() <= 200.0 {
                    rule.integrate(|w| bump(w / g) * (w * t).cos()) / std::f64::consts::PI
                } else {
                    let panels = ((g * t).abs() / 3.0).ceil() as usize;
                    Composite::new(0.0, g, panels, 16).integrate(|w| bump(w / g) * (w * t).cos()) / std::f64::consts::PI
                }
            }
        }
    }

    /// `χ̂_γ(ω) = ∫ χ_γ(t) e^{iωt} dt` (real and even).
    pub fn chi_hat(&self, omega: f64) -> f64 {
        match self.kind {
            FilterKind::Gaussian => gaussian_table().eval((self.gamma * omega).abs()),
            FilterKind::CompactBump => bump(omega / self.gamma),
        }
    }

    /// The transform as printed for the Gaussian instance, `e^{−2γ²ω²}`, kept
    /// for side-by-side reporting. `None` for the bump.
    pub fn stated_gaussian_chi_hat(&self, omega: f64) -> Option<f64> {
        match self.kind {
            FilterKind::Gaussian => Some((-2.0 * self.gamma * self.gamma * omega * omega).exp()),
            FilterKind::CompactBump => None,
        }
    }

    /// Real part `g(ω) = (1 − χ̂(ω))/ω` of the kernel, with `w(ω) = i·g(ω)`.
    pub fn kernel_real(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return 0.0;
        }
        match self.kind {
            FilterKind::Gaussian => {
                let x = self.gamma * omega;
                if x.abs() < SERIES_CUTOFF {
                    let [m2, m4, m6] = gaussian_table().moments;
                    let x2 = x * x;
                    self.gamma * x * (m2 / 2.0 - x2 * (m4 / 24.0 - x2 * m6 / 720.0))
                } else {
                    (1.0 - self.chi_hat(omega)) / omega
                }
            }
            FilterKind::CompactBump => {
                let u = omega / self.gamma;
                if u.abs() >= 1.0 {
                    return 1.0 / omega;
                }
                let u2 = u * u;
                -(-u2 / (1.0 - u2)).exp_m1() / omega
            }
        }
    }

    /// Time beyond which the tail mass `∫_{|t|>T} |χ|` is negligible.
    pub fn suggested_time_cut(&self) -> f64 {
        match self.kind {
            FilterKind::Gaussian => 9.0 * self.gamma,
            FilterKind::CompactBump => 3000.0 / self.gamma,
        }
    }
}

/// `w(ω) = ∫ χ(t) ∫_0^t e^{iuω} du dt = (χ̂(ω) − 1)/(iω)`, with `w(0) = 0`.
pub fn filter_kernel_weight(filter: &Filter, omega: f64) -> c64 {
    c64::new(0.0, filter.kernel_real(omega))
}
