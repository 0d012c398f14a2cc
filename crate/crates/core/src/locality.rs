//! Lieb-Robinson commutator scans and a fit of the bound
//! `‖[τ_t(A), B]‖ ≤ |Y|·e^{−v·d}·(e^{κ|t|} − 1)`.

use serde::Serialize;

use crate::chain::{embed_operator, ChainHamiltonian, SupportInterval};
use crate::error::{Error, Result};
use crate::linalg::{self, Op, I};
use crate::oracle::{eigendecompose, heisenberg_evolve, EigenDecomposition};

/// Samples with a commutator norm at or above this are saturated.
pub const PRE_SATURATION: f64 = 0.2;

/// Multiplicative safety margin applied to the fitted bound.
pub const BOUND_INFLATION: f64 = 1.1;

/// `v` multiplies the distance and `kappa_lr` the time in the bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LrConstants {
    pub v: f64,
    pub kappa_lr: f64,
}

impl LrConstants {
    /// `|Y|·e^{−v·d}·(e^{κ|t|} − 1)`.
    pub fn bound(&self, support_size: usize, distance: usize, t: f64) -> f64 {
        support_size as f64 * (-self.v * distance as f64).exp() * (self.kappa_lr * t.abs()).exp_m1()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LrSample {
    pub t: f64,
    pub distance: usize,
    /// Number of sites in the support of `B`.
    pub support_size: usize,
    pub commutator_norm: f64,
    /// Inflated fitted bound, once constants are known.
    pub bound_value: Option<f64>,
}

/// Observables of a scan: `A` on one site, `B` on `b_op`'s support placed at
/// each requested distance from `A`.
#[derive(Clone, Debug)]
pub struct LrProbe {
    pub a_site: usize,
    pub a_op: Op,
    pub b_op: Op,
}

impl LrProbe {
    /// `σᶻ` on `a_site` against `σᶻ` elsewhere.
    pub fn sigma_z(a_site: usize) -> Self {
        Self {
            a_site,
            a_op: linalg::pauli_z(),
            b_op: linalg::pauli_z(),
        }
    }

    /// Support of `B` at distance `d`: to the right of `A` when it fits, else
    /// to the left.
    pub fn b_support(&self, d: usize, n: usize) -> Result<SupportInterval> {
        let w = linalg::qubits_of(self.b_op.nrows())?;
        if d == 0 {
            return Err(Error::InvalidArgument("A and B supports overlap at distance 0".into()));
        }
        if self.a_site + d + w <= n {
            return SupportInterval::new(self.a_site + d, self.a_site + d + w - 1, n);
        }
        if self.a_site >= d + w - 1 {
            return SupportInterval::new(self.a_site + 1 - d - w, self.a_site - d, n);
        }
        Err(Error::InvalidArgument(format!(
            "no room for B at distance {d} from site {} in a {n}-site chain",
            self.a_site
        )))
    }
}

fn unit(op: &Op) -> Result<Op> {
    linalg::ensure_hermitian(op, 1e-12)?;
    let norm = linalg::hermitian_norm(op);
    if norm == 0.0 {
        return Err(Error::InvalidArgument("probe observable is zero".into()));
    }
    Ok(linalg::scale_real(op, 1.0 / norm))
}

/// Exact `‖[τ_t(A), B]‖` for every `(t, d)`, ordered by `t` then `d`.
/// `A` and `B` are normalized to unit norm.
pub fn lr_commutator_scan(h: &ChainHamiltonian, probe: &LrProbe, t_grid: &[f64], d_grid: &[usize]) -> Result<Vec<LrSample>> {
    let decomp = eigendecompose(&h.dense)?;
    lr_commutator_scan_with(&decomp, h.n, probe, t_grid, d_grid)
}

pub fn lr_commutator_scan_with(decomp: &EigenDecomposition, n: usize, probe: &LrProbe, t_grid: &[f64], d_grid: &[usize]) -> Result<Vec<LrSample>> {
    if probe.a_op.nrows() != 2 || probe.a_site >= n {
        return Err(Error::InvalidArgument("A must be a single-site operator inside the chain".into()));
    }
    let a = embed_operator(&unit(&probe.a_op)?, SupportInterval::single(probe.a_site), n)?;
    let b_unit = unit(&probe.b_op)?;
    let mut bs = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        let support = probe.b_support(d, n)?;
        bs.push((d, support.width(), embed_operator(&b_unit, support, n)?));
    }
    let mut out = Vec::with_capacity(t_grid.len() * d_grid.len());
    for &t in t_grid {
        let at = heisenberg_evolve(decomp, &a, t)?;
        for (d, width, b) in &bs {
            // i[A, B] is Hermitian for Hermitian A and B.
            let c = linalg::scale(&linalg::commutator(&at, b), I);
            out.push(LrSample {
                t,
                distance: *d,
                support_size: *width,
                commutator_norm: linalg::hermitian_norm(&c),
                bound_value: None,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LrFit {
    pub constants: LrConstants,
    /// RMS residual of `log‖[τ_t(A), B]‖` over the samples used.
    pub residual: f64,
    pub samples_used: usize,
}

struct Point {
    t: f64,
    d: f64,
    /// `log(norm/|Y|)`.
    y: f64,
}

/// For fixed `κ`, the least-squares `v` subject to the inflated bound lying
/// above every point. Returns `(v, sum of squares)` or `None` if no positive
/// `v` satisfies the constraint.
fn best_v(points: &[Point], kappa: f64) -> Option<(f64, f64)> {
    let margin = BOUND_INFLATION.ln();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut v_max = f64::INFINITY;
    for p in points {
        let f = (kappa * p.t).exp_m1().ln();
        num += p.d * (f - p.y);
        den += p.d * p.d;
        v_max = v_max.min((f - p.y + margin) / p.d);
    }
    let v = (num / den).min(v_max);
    if !(v > 0.0) || !v.is_finite() {
        return None;
    }
    let ss = points
        .iter()
        .map(|p| {
            let r = p.y + v * p.d - (kappa * p.t).exp_m1().ln();
            r * r
        })
        .sum();
    Some((v, ss))
}

/// Fit `(v, κ)` to the pre-saturation samples.
///
/// `log(norm/|Y|) ≈ −v·d + log(e^{κt} − 1)` is linear in `v` for fixed `κ`; `v`
/// is solved in closed form under the constraint that the bound inflated by
/// [`BOUND_INFLATION`] dominates every sample, and `κ` is found by a log-spaced
/// scan refined with golden-section search.
pub fn fit_lr_constants(samples: &[LrSample]) -> Result<LrFit> {
    if samples.iter().all(|s| s.commutator_norm <= 0.0) {
        return Err(Error::Fit("all commutator norms are zero; the logarithm is undefined".into()));
    }
    let points: Vec<Point> = samples
        .iter()
        .filter(|s| s.t > 0.0 && s.distance > 0 && s.commutator_norm > 0.0 && s.commutator_norm < PRE_SATURATION)
        .map(|s| Point {
            t: s.t.abs(),
            d: s.distance as f64,
            y: (s.commutator_norm / s.support_size as f64).ln(),
        })
        .collect();
    let mut distances: Vec<u64> = points.iter().map(|p| p.d as u64).collect();
    distances.sort_unstable();
    distances.dedup();
    let mut times: Vec<u64> = points.iter().map(|p| p.t.to_bits()).collect();
    times.sort_unstable();
    times.dedup();
    if points.len() < 10 || distances.len() < 3 || times.len() < 2 {
        return Err(Error::Fit(format!(
            "degenerate design: {} usable samples over {} distances and {} times (need ≥ 10, ≥ 3, ≥ 2)",
            points.len(),
            distances.len(),
            times.len()
        )));
    }

    let objective = |log_k: f64| best_v(&points, log_k.exp()).map_or(f64::INFINITY, |(_, ss)| ss);
    let (lo, hi, cells) = ((1e-3f64).ln(), (1e3f64).ln(), 240);
    let step = (hi - lo) / cells as f64;
    let (best, best_val) = (0..=cells)
        .map(|i| (i, objective(lo + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if !best_val.is_finite() {
        return Err(Error::Fit("no positive decay rate is consistent with the samples".into()));
    }
    let centre = lo + step * best as f64;
    let log_k = golden_section(&objective, centre - step, centre + step, 1e-13);
    let log_k = if objective(log_k) <= best_val { log_k } else { centre };
    let kappa_lr = log_k.exp();
    let (v, ss) = best_v(&points, kappa_lr).ok_or_else(|| Error::Fit("fit left the feasible region".into()))?;
    Ok(LrFit {
        constants: LrConstants { v, kappa_lr },
        residual: (ss / points.len() as f64).sqrt(),
        samples_used: points.len(),
    })
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fill `bound_value` with the inflated fitted bound.
pub fn attach_bounds(samples: &mut [LrSample], constants: &LrConstants) {
    for s in samples {
        s.bound_value = Some(BOUND_INFLATION * constants.bound(s.support_size, s.distance, s.t));
    }
}

/// Pre-saturation samples exceeding the inflated bound by more than rounding
/// noise.
pub fn bound_violations<'a>(samples: &'a [LrSample], constants: &LrConstants) -> Vec<&'a LrSample> {
    samples
        .iter()
        .filter(|s| s.commutator_norm < PRE_SATURATION)
        .filter(|s| s.commutator_norm > BOUND_INFLATION * constants.bound(s.support_size, s.distance, s.t) * (1.0 + 1e-12) + 1e-12)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainFamily, Model, DEFAULT_SITE_CAP};

    fn synthetic(c: LrConstants) -> Vec<LrSample> {
        let mut out = Vec::new();
        for d in 1..=5 {
            for k in 1..=8 {
                let t = 0.05 * k as f64;
                out.push(LrSample {
                    t,
                    distance: d,
                    support_size: 1,
                    commutator_norm: c.bound(1, d, t),
                    bound_value: None,
                });
            }
        }
        out
    }

    #[test]
    fn synthetic_round_trip() {
        for c in [LrConstants { v: 1.3, kappa_lr: 2.1 }, LrConstants { v: 0.7, kappa_lr: 0.9 }] {
            let fit = fit_lr_constants(&synthetic(c)).unwrap();
            assert!((fit.constants.v - c.v).abs() < 1e-6, "{fit:?}");
            assert!((fit.constants.kappa_lr - c.kappa_lr).abs() < 1e-6, "{fit:?}");
            assert!(fit.residual < 1e-6);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let zeros: Vec<_> = synthetic(LrConstants { v: 1.0, kappa_lr: 1.0 })
            .into_iter()
            .map(|mut s| {
                s.commutator_norm = 0.0;
                s
            })
            .collect();
        assert!(matches!(fit_lr_constants(&zeros), Err(Error::Fit(m)) if m.contains("zero")));
        let one_distance: Vec<_> = synthetic(LrConstants { v: 1.0, kappa_lr: 1.0 }).into_iter().filter(|s| s.distance == 2).collect();
        assert!(matches!(fit_lr_constants(&one_distance), Err(Error::Fit(_))));
    }

    #[test]
    fn scan_starts_at_zero_and_fit_dominates() {
        let h = Model::default().build(6, DEFAULT_SITE_CAP).unwrap();
        let t_grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let mut samples = lr_commutator_scan(&h, &LrProbe::sigma_z(0), &t_grid, &[1, 2, 3, 4, 5]).unwrap();
        assert!(samples.iter().filter(|s| s.t == 0.0).all(|s| s.commutator_norm < 1e-12));
        assert!(samples.iter().all(|s| s.commutator_norm <= 2.0 + 1e-12));
        let fit = fit_lr_constants(&samples).unwrap();
        assert!(bound_violations(&samples, &fit.constants).is_empty());
        attach_bounds(&mut samples, &fit.constants);
        assert!(samples.iter().all(|s| s.bound_value.is_some()));
        // Norms fall off with distance at fixed time.
        for t in &t_grid {
            let row: Vec<f64> = samples.iter().filter(|s| s.t == *t).map(|s| s.commutator_norm).collect();
            assert!(row.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        }
    }

    #[test]
    fn b_placement() {
        let p = LrProbe::sigma_z(5);
        assert_eq!(p.b_support(2, 6).unwrap(), SupportInterval { lo: 3, hi: 3 });
        assert_eq!(LrProbe::sigma_z(0).b_support(3, 6).unwrap(), SupportInterval { lo: 3, hi: 3 });
        assert!(p.b_support(0, 6).is_err());
        assert!(LrProbe::sigma_z(0).b_support(6, 6).is_err());
    }
}
