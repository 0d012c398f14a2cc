//! Spin-1/2 chain Hamiltonians built from 2-local terms, operator embedding
//! and partial traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, kron, Col, Mat, Op, Side, State, ONE, ZERO};

pub const DEFAULT_SITE_CAP: usize = 16;
/// Environment variable overriding the site cap.
pub const SITE_CAP_ENV: &str = "CHAINGLUE_SITE_CAP";

const HERMITIAN_TOL: f64 = 1e-12;

/// Inclusive contiguous range of sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lo: usize,
    pub hi: usize,
}

impl SupportInterval {
    pub fn new(lo: usize, hi: usize, n: usize) -> Result<Self> {
        if lo > hi || hi >= n {
            return Err(Error::InvalidArgument(format!(
                "support [{lo}, {hi}] is not a valid interval of a {n}-site chain"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn single(site: usize) -> Self {
        Self { lo: site, hi: site }
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, site: usize) -> bool {
        (self.lo..=self.hi).contains(&site)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Site distance between two disjoint intervals (0 if they overlap).
    pub fn distance(&self, other: &Self) -> usize {
        if self.intersects(other) {
            0
        } else if self.hi < other.lo {
            other.lo - self.hi
        } else {
            self.lo - other.hi
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// `J σᶻ⊗σᶻ`, params `[J]`.
    IsingZz,
    /// `h σˣ` distributed onto the bond, params `[h]`.
    FieldX,
    /// `h σᶻ` distributed onto the bond, params `[h]`.
    FieldZ,
    /// `Jx σˣσˣ + Jy σʸσʸ + Jz σᶻσᶻ`, params `[Jx, Jy, Jz]`.
    Heisenberg,
    /// Arbitrary Hermitian 4×4 matrix, params are 32 reals: row-major
    /// interleaved real and imaginary parts.
    Custom,
}

impl TermKind {
    fn param_count(self) -> usize {
        match self {
            TermKind::IsingZz | TermKind::FieldX | TermKind::FieldZ => 1,
            TermKind::Heisenberg => 3,
            TermKind::Custom => 32,
        }
    }
}

/// A Hermitian operator on the bond `(site, site + 1)`.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub site: usize,
    pub matrix: Op,
    pub label: String,
}

/// Build the 2-local term of the given kind on bond `(site, site + 1)` of an
/// `n`-site open chain.
///
/// Single-site fields are split across the two bonds touching a site: half
/// weight on interior sites, full weight on the chain ends, so that summing the
/// field terms over all bonds gives exactly `h Σ_i σ_i`.
pub fn build_local_term(kind: TermKind, params: &[f64], site: usize, n: usize) -> Result<LocalTerm> {
    if params.len() != kind.param_count() {
        return Err(Error::InvalidArgument(format!(
            "{kind:?} takes {} parameters, got {}",
            kind.param_count(),
            params.len()
        )));
    }
    if n < 2 || site + 1 >= n {
        return Err(Error::InvalidArgument(format!(
            "bond ({site}, {}) does not exist in a {n}-site chain",
            site + 1
        )));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("non-finite term parameter".into()));
    }
    let id = linalg::identity(2);
    let (matrix, label) = match kind {
        TermKind::IsingZz => {
            let zz = kron(&linalg::pauli_z(), &linalg::pauli_z());
            (linalg::scale_real(&zz, params[0]), format!("{}*ZZ", params[0]))
        }
        TermKind::FieldX | TermKind::FieldZ => {
            let (p, name) = if kind == TermKind::FieldX {
                (linalg::pauli_x(), "X")
            } else {
                (linalg::pauli_z(), "Z")
            };
            let left = if site == 0 { 1.0 } else { 0.5 };
            let right = if site + 2 == n { 1.0 } else { 0.5 };
            let m = linalg::scale_real(&kron(&p, &id), left * params[0])
                + linalg::scale_real(&kron(&id, &p), right * params[0]);
            (m, format!("{}*{name}", params[0]))
        }
        TermKind::Heisenberg => {
            let xx = kron(&linalg::pauli_x(), &linalg::pauli_x());
            let yy = kron(&linalg::pauli_y(), &linalg::pauli_y());
            let zz = kron(&linalg::pauli_z(), &linalg::pauli_z());
            let m = linalg::scale_real(&xx, params[0])
                + linalg::scale_real(&yy, params[1])
                + linalg::scale_real(&zz, params[2]);
            (m, format!("heisenberg({},{},{})", params[0], params[1], params[2]))
        }
        TermKind::Custom => {
            let m = Mat::from_fn(4, 4, |i, j| {
                let k = 2 * (4 * i + j);
                c64::new(params[k], params[k + 1])
            });
            (m, "custom".to_string())
        }
    };
    linalg::ensure_hermitian(&matrix, HERMITIAN_TOL)?;
    Ok(LocalTerm { site, matrix, label })
}

/// Dense Hamiltonian of an open chain together with its term list.
///
/// `dense = Σ embed(term) − energy_shift · I`.
#[derive(Clone, Debug)]
pub struct ChainHamiltonian {
    pub n: usize,
    pub terms: Vec<LocalTerm>,
    pub dense: Op,
    pub energy_shift: f64,
}

impl ChainHamiltonian {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// The sum of embedded terms without the ground-energy shift.
    pub fn unshifted(&self) -> Op {
        shifted(&self.dense, self.energy_shift)
    }
}

fn shifted(a: &Op, by: f64) -> Op {
    let mut out = a.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += c64::new(by, 0.0);
    }
    out
}

/// Site cap honoring the `CHAINGLUE_SITE_CAP` override.
pub fn site_cap_from_env(default: usize) -> usize {
    match std::env::var(SITE_CAP_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(cap) => {
                log::warn!("{SITE_CAP_ENV}={cap} overrides the site cap of {default}");
                cap
            }
            Err(_) => {
                log::warn!("ignoring unparsable {SITE_CAP_ENV}={raw:?}");
                default
            }
        },
        Err(_) => default,
    }
}

pub fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::OverCap { n, cap });
    }
    Ok(())
}

/// Sum identity-padded terms into the dense chain Hamiltonian.
pub fn assemble_chain(terms: Vec<LocalTerm>, n: usize, shift_ground_to_zero: bool, cap: usize) -> Result<ChainHamiltonian> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a chain needs at least 2 sites, got {n}")));
    }
    check_cap(n, cap)?;
    let mut dense = linalg::zeros(1 << n);
    for term in &terms {
        if term.site + 1 >= n {
            return Err(Error::InvalidArgument(format!(
                "term '{}' on bond {} lies outside the {n}-site chain",
                term.label, term.site
            )));
        }
        let support = SupportInterval::new(term.site, term.site + 1, n)?;
        add_embedded(&mut dense, &term.matrix, support, n)?;
    }
    let mut energy_shift = 0.0;
    if shift_ground_to_zero {
        let ev = dense
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        energy_shift = ev[0];
        dense = shifted(&dense, -energy_shift);
    }
    Ok(ChainHamiltonian {
        n,
        terms,
        dense,
        energy_shift,
    })
}

fn check_embed(op: &Op, support: SupportInterval, n: usize) -> Result<()> {
    if support.hi >= n {
        return Err(Error::Dimension(format!("support {support:?} outside {n} sites")));
    }
    let want = 1usize << support.width();
    if op.nrows() != want || op.ncols() != want {
        return Err(Error::Dimension(format!(
            "operator of size {}x{} cannot act on {} sites",
            op.nrows(),
            op.ncols(),
            support.width()
        )));
    }
    Ok(())
}

fn add_embedded(target: &mut Op, op: &Op, support: SupportInterval, n: usize) -> Result<()> {
    check_embed(op, support, n)?;
    let mid = op.nrows();
    let right = 1usize << (n - 1 - support.hi);
    let left = 1usize << support.lo;
    for l in 0..left {
        for r in 0..right {
            let base = l * mid * right + r;
            for b in 0..mid {
                for a in 0..mid {
                    let v = op[(a, b)];
                    if v != ZERO {
                        target[(base + a * right, base + b * right)] += v;
                    }
                }
            }
        }
    }
    Ok(())
}

/// `I ⊗ op ⊗ I` with `op` placed on `support` of an `n`-site chain.
pub fn embed_operator(op: &Op, support: SupportInterval, n: usize) -> Result<Op> {
    let mut out = linalg::zeros(1 << n);
    add_embedded(&mut out, op, support, n)?;
    Ok(out)
}

/// Reduced density operator on `keep` of an `n`-site density operator.
pub fn partial_trace(rho: &Op, keep: SupportInterval, n: usize) -> Result<Op> {
    if rho.nrows() != 1 << n || rho.ncols() != 1 << n || keep.hi >= n {
        return Err(Error::Dimension(format!(
            "density operator of size {} does not match {n} sites / keep {keep:?}",
            rho.nrows()
        )));
    }
    let mid = 1usize << keep.width();
    let right = 1usize << (n - 1 - keep.hi);
    let left = 1usize << keep.lo;
    let mut out = linalg::zeros(mid);
    for b in 0..mid {
        for a in 0..mid {
            let mut acc = ZERO;
            for l in 0..left {
                for r in 0..right {
                    let base = l * mid * right + r;
                    acc += rho[(base + a * right, base + b * right)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density operator of a pure state, without forming `|ψ⟩⟨ψ|`.
pub fn reduced_density(psi: &State, keep: SupportInterval, n: usize) -> Result<Op> {
    if psi.nrows() != 1 << n || keep.hi >= n {
        return Err(Error::Dimension(format!(
            "state of length {} does not match {n} sites / keep {keep:?}",
            psi.nrows()
        )));
    }
    let mid = 1usize << keep.width();
    let right = 1usize << (n - 1 - keep.hi);
    let left = 1usize << keep.lo;
    let mut out = linalg::zeros(mid);
    for l in 0..left {
        for r in 0..right {
            let base = l * mid * right + r;
            let slice: Vec<c64> = (0..mid).map(|a| psi[base + a * right]).collect();
            for b in 0..mid {
                let cb = slice[b].conj();
                if cb == ZERO {
                    continue;
                }
                for a in 0..mid {
                    out[(a, b)] += slice[a] * cb;
                }
            }
        }
    }
    Ok(out)
}

/// Pure density operator `|ψ⟩⟨ψ|`.
pub fn projector(psi: &State) -> Op {
    Mat::from_fn(psi.nrows(), psi.nrows(), |i, j| psi[i] * psi[j].conj())
}

/// Tensor product of a list of states.
pub fn product_state(parts: &[State]) -> State {
    let mut acc = Col::from_fn(1, |_| ONE);
    for p in parts {
        acc = linalg::kron_state(&acc, p);
    }
    acc
}

/// A Hamiltonian family that can be instantiated on any chain length.
pub trait ChainFamily: Sync {
    /// Hamiltonian on `n` sites, shifted so its ground energy is zero.
    fn build(&self, n: usize, cap: usize) -> Result<ChainHamiltonian>;
}

/// Built-in translation-invariant models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    /// `H = −J Σ σᶻσᶻ − h Σ σˣ`.
    Tfim { coupling: f64, field: f64 },
    /// `H = Σ (Jx σˣσˣ + Jy σʸσʸ + Jz σᶻσᶻ) + h Σ σᶻ`.
    Heisenberg { couplings: [f64; 3], field: f64 },
}

impl Default for Model {
    fn default() -> Self {
        Model::Tfim {
            coupling: 1.0,
            field: 1.5,
        }
    }
}

impl Model {
    pub fn terms(&self, n: usize) -> Result<Vec<LocalTerm>> {
        let mut terms = Vec::new();
        for site in 0..n.saturating_sub(1) {
            match self {
                Model::Tfim { coupling, field } => {
                    terms.push(build_local_term(TermKind::IsingZz, &[-coupling], site, n)?);
                    terms.push(build_local_term(TermKind::FieldX, &[-field], site, n)?);
                }
                Model::Heisenberg { couplings, field } => {
                    terms.push(build_local_term(TermKind::Heisenberg, couplings, site, n)?);
                    if *field != 0.0 {
                        terms.push(build_local_term(TermKind::FieldZ, &[*field], site, n)?);
                    }
                }
            }
        }
        Ok(terms)
    }

    /// Same model with the transverse/longitudinal field replaced.
    pub fn with_field(&self, field: f64) -> Self {
        match self {
            Model::Tfim { coupling, .. } => Model::Tfim {
                coupling: *coupling,
                field,
            },
            Model::Heisenberg { couplings, .. } => Model::Heisenberg {
                couplings: *couplings,
                field,
            },
        }
    }

    pub fn field(&self) -> f64 {
        match self {
            Model::Tfim { field, .. } | Model::Heisenberg { field, .. } => *field,
        }
    }

    /// Unshifted dense Hamiltonian on `n` sites.
    pub fn dense_unshifted(&self, n: usize, cap: usize) -> Result<Op> {
        Ok(assemble_chain(self.terms(n)?, n, false, cap)?.dense)
    }
}

impl ChainFamily for Model {
    fn build(&self, n: usize, cap: usize) -> Result<ChainHamiltonian> {
        assemble_chain(self.terms(n)?, n, true, cap)
    }
}
