use crate::chain::{assemble_chain, ChainFamily, ChainHamiltonian, SupportInterval};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, Mat, Op, State, ZERO};
use crate::oracle::{eigendecompose, ground_info, GroundInfo};

/// A chain `H` cut into blocks `A = [0, m)` and `B = [m, n)`.
///
/// `K = H_A ⊗ I + I ⊗ H_B` with both blocks shifted to ground energy zero, so
/// `H = K + h_I + δ·I` where `h_I` is the two-site boundary operator on
/// `(m − 1, m)` and `δ = E0(A) + E0(B) − E0(H)` computed from the unshifted
/// operators.
#[derive(Clone, Debug)]
pub struct SplitSystem {
    pub h: ChainHamiltonian,
    pub m: usize,
    pub h_a: ChainHamiltonian,
    pub h_b: ChainHamiltonian,
    /// Boundary operator on sites `(m − 1, m)`, without `δ`.
    pub h_i: Op,
    pub delta: f64,
    /// Dense `K`, ground energy zero.
    pub k: Op,
    pub ground_h: GroundInfo,
    pub ground_a: GroundInfo,
    pub ground_b: GroundInfo,
}

impl SplitSystem {
    pub fn n(&self) -> usize {
        self.h.n
    }

    /// `|Ω_K⟩ = |Ω_A⟩ ⊗ |Ω_B⟩`.
    pub fn ground_k(&self) -> State {
        linalg::kron_state(&self.ground_a.state, &self.ground_b.state)
    }

    pub fn gap_k(&self) -> f64 {
        self.ground_a.gap.min(self.ground_b.gap)
    }

    /// Gap `ΔE` of `L = H ⊕ K` above its ground doublet.
    pub fn delta_e(&self) -> f64 {
        self.ground_h.gap.min(self.gap_k())
    }

    /// `⟨Ω_K|Ω_H⟩`.
    pub fn overlap(&self) -> c64 {
        linalg::inner(&self.ground_k(), &self.ground_h.state)
    }

    /// `H_I = h_I + δ·I` embedded in the `n`-site chain.
    pub fn h_i_full(&self) -> Result<Op> {
        let mut out = crate::chain::embed_operator(&self.h_i, self.bond(), self.n())?;
        for i in 0..out.nrows() {
            out[(i, i)] += c64::new(self.delta, 0.0);
        }
        Ok(out)
    }

    pub fn bond(&self) -> SupportInterval {
        SupportInterval { lo: self.m - 1, hi: self.m }
    }

    /// Unshifted `K` restricted to the bonds lying inside `[lo, hi]`, as an
    /// operator on `hi − lo + 1` sites. Global constants are dropped.
    pub fn window_k(&self, lo: usize, hi: usize) -> Result<Op> {
        let width = hi - lo + 1;
        let mut out = linalg::zeros(1 << width);
        let blocks = [(&self.h_a, 0usize), (&self.h_b, self.m)];
        for (block, offset) in blocks {
            for term in &block.terms {
                let a = term.site + offset;
                if a >= lo && a < hi {
                    let support = SupportInterval::new(a - lo, a + 1 - lo, width)?;
                    out += crate::chain::embed_operator(&term.matrix, support, width)?;
                }
            }
        }
        Ok(out)
    }
}

/// Split using the blocks the caller supplies.
///
/// `h`, `h_a` and `h_b` are the chain and block Hamiltonians (any ground-energy
/// shift is undone internally). Fails if the leftover boundary operator is not
/// supported on `(m − 1, m)` or if any of the three ground states is degenerate.
pub fn split_with_blocks(h: ChainHamiltonian, h_a: ChainHamiltonian, h_b: ChainHamiltonian) -> Result<SplitSystem> {
    let n = h.n;
    let m = h_a.n;
    if m == 0 || m >= n || h_b.n != n - m {
        return Err(Error::InvalidArgument(format!(
            "blocks of {} and {} sites do not tile a {n}-site chain",
            h_a.n, h_b.n
        )));
    }
    let full = h.unshifted();
    let k_raw = linalg::kron(&h_a.unshifted(), &linalg::identity(h_b.dim())) + linalg::kron(&linalg::identity(h_a.dim()), &h_b.unshifted());
    let boundary = &full - &k_raw;
    let bond = SupportInterval::new(m - 1, m, n)?;
    let h_i = extract_two_site(&boundary, bond, n)?;
    let rebuilt = crate::chain::embed_operator(&h_i, bond, n)?;
    let scale = linalg::frobenius(&full).max(1.0);
    let defect = linalg::max_abs_diff(&rebuilt, &boundary);
    if defect > 1e-10 * scale {
        return Err(Error::InvalidArgument(format!(
            "H − H_A − H_B is not supported on sites ({}, {m}) (residual {defect:.3e})",
            m - 1
        )));
    }

    let ground_h = ground_info(&eigendecompose(&h.dense)?).require_gapped()?;
    let ground_a = ground_info(&eigendecompose(&h_a.dense)?).require_gapped()?;
    let ground_b = ground_info(&eigendecompose(&h_b.dense)?).require_gapped()?;
    let delta = h_a.energy_shift + h_b.energy_shift + ground_a.energy + ground_b.energy - h.energy_shift - ground_h.energy;
    let k = linalg::kron(&h_a.dense, &linalg::identity(h_b.dim())) + linalg::kron(&linalg::identity(h_a.dim()), &h_b.dense);
    let shift = ground_a.energy + ground_b.energy;
    let k = if shift != 0.0 {
        Mat::from_fn(k.nrows(), k.ncols(), |i, j| if i == j { k[(i, j)] - shift } else { k[(i, j)] })
    } else {
        k
    };
    Ok(SplitSystem {
        h,
        m,
        h_a,
        h_b,
        h_i,
        delta,
        k,
        ground_h,
        ground_a,
        ground_b,
    })
}

/// Split with blocks taken from the same family: `H_A = H_m`, `H_B = H_{n−m}`.
pub fn split(family: &dyn ChainFamily, n: usize, m: usize, cap: usize) -> Result<SplitSystem> {
    if m < 2 || n < m + 2 {
        return Err(Error::InvalidArgument(format!(
            "both blocks need at least 2 sites (n = {n}, m = {m})"
        )));
    }
    split_with_blocks(family.build(n, cap)?, family.build(m, cap)?, family.build(n - m, cap)?)
}

/// Split by partitioning the term list: `H_A = Σ_{j ≤ m−2} h_j`,
/// `H_B = Σ_{j ≥ m} h_j` and `h_I = h_{m−1}`.
pub fn split_terms(h: &ChainHamiltonian, m: usize, cap: usize) -> Result<SplitSystem> {
    let n = h.n;
    if m < 2 || n < m + 2 {
        return Err(Error::InvalidArgument(format!(
            "both blocks need at least 2 sites (n = {n}, m = {m})"
        )));
    }
    let a_terms = h.terms.iter().filter(|t| t.site + 2 <= m).cloned().collect();
    let b_terms = h
        .terms
        .iter()
        .filter(|t| t.site >= m)
        .map(|t| {
            let mut t = t.clone();
            t.site -= m;
            t
        })
        .collect();
    let h_a = assemble_chain(a_terms, m, true, cap)?;
    let h_b = assemble_chain(b_terms, n - m, true, cap)?;
    split_with_blocks(h.clone(), h_a, h_b)
}

/// `2^{-(n-2)}·tr_{rest}(op)` for the pair of adjacent sites in `bond`.
fn extract_two_site(op: &Op, bond: SupportInterval, n: usize) -> Result<Op> {
    if op.nrows() != 1 << n {
        return Err(Error::Dimension("operator does not match chain length".into()));
    }
    let right = 1usize << (n - 1 - bond.hi);
    let left = 1usize << bond.lo;
    let mut out = Mat::from_fn(4, 4, |_, _| ZERO);
    for l in 0..left {
        for r in 0..right {
            let base = l * 4 * right + r;
            for b in 0..4 {
                for a in 0..4 {
                    out[(a, b)] += op[(base + a * right, base + b * right)];
                }
            }
        }
    }
    let norm = 1.0 / (left * right) as f64;
    Ok(linalg::scale_real(&out, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Model, DEFAULT_SITE_CAP};
    use crate::linalg::{kron, max_abs_diff, pauli_z};

    #[test]
    fn tfim_split_has_product_ground_state() {
        let s = split(&Model::default(), 4, 2, DEFAULT_SITE_CAP).unwrap();
        let k = eigendecompose(&s.k).unwrap();
        assert!(k.ground_energy().abs() < 1e-9);
        let fid = linalg::inner(&k.ground_state(), &s.ground_k()).norm();
        assert!(fid > 1.0 - 1e-10);
    }

    #[test]
    fn reassembly_and_boundary_term() {
        let s = split(&Model::default(), 5, 2, DEFAULT_SITE_CAP).unwrap();
        let rebuilt = &s.k + &s.h_i_full().unwrap();
        assert!(max_abs_diff(&rebuilt, &s.h.dense) < 1e-10);
        // For the Ising family the whole field is accounted for by the blocks.
        let want = linalg::scale_real(&kron(&pauli_z(), &pauli_z()), -1.0);
        assert!(max_abs_diff(&s.h_i, &want) < 1e-12);
    }

    #[test]
    fn term_split_uses_the_bond_term() {
        let h = Model::default().build(4, DEFAULT_SITE_CAP).unwrap();
        let s = split_terms(&h, 2, DEFAULT_SITE_CAP).unwrap();
        let bond = h.terms.iter().filter(|t| t.site == 1).fold(linalg::zeros(4), |acc, t| acc + &t.matrix);
        assert!(max_abs_diff(&s.h_i, &bond) < 1e-12);
        let rebuilt = &s.k + &s.h_i_full().unwrap();
        assert!(max_abs_diff(&rebuilt, &s.h.dense) < 1e-10);
        assert!(eigendecompose(&s.k).unwrap().ground_energy().abs() < 1e-9);
    }

    #[test]
    fn window_of_whole_chain_is_k() {
        let s = split(&Model::default(), 4, 2, DEFAULT_SITE_CAP).unwrap();
        let w = s.window_k(0, 3).unwrap();
        let k_raw = kron(&s.h_a.unshifted(), &linalg::identity(4)) + kron(&linalg::identity(4), &s.h_b.unshifted());
        assert!(max_abs_diff(&w, &k_raw) < 1e-12);
    }

    #[test]
    fn degenerate_blocks_abort() {
        let ising = Model::Tfim { coupling: 1.0, field: 0.0 };
        assert!(matches!(split(&ising, 4, 2, DEFAULT_SITE_CAP), Err(Error::Degenerate { .. })));
        assert!(split(&Model::default(), 4, 1, DEFAULT_SITE_CAP).is_err());
    }
}
