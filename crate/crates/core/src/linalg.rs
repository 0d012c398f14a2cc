//! Dense complex linear algebra helpers on top of `faer`.
//!
//! Site ordering convention: site 0 is the leftmost tensor factor, so a basis
//! index reads `|s_0 s_1 ... s_{n-1}>` with `s_0` as the most significant bit.

pub use faer::{c64, Col, Mat, Side};

use crate::error::{Error, Result};

/// Dense operator.
pub type Op = Mat<c64>;
/// Dense state vector.
pub type State = Col<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn identity(dim: usize) -> Op {
    Mat::identity(dim, dim)
}

pub fn zeros(dim: usize) -> Op {
    Mat::zeros(dim, dim)
}

pub fn pauli_x() -> Op {
    Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn pauli_y() -> Op {
    let mut m = zeros(2);
    m[(0, 1)] = c64::new(0.0, -1.0);
    m[(1, 0)] = c64::new(0.0, 1.0);
    m
}

pub fn pauli_z() -> Op {
    Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => ONE,
        (1, 1) => -ONE,
        _ => ZERO,
    })
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Op, b: &Op) -> Op {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_state(a: &State, b: &State) -> State {
    let nb = b.nrows();
    Col::from_fn(a.nrows() * nb, |i| a[i / nb] * b[i % nb])
}

pub fn dagger(a: &Op) -> Op {
    a.adjoint().to_owned()
}

pub fn scale(a: &Op, s: c64) -> Op {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn scale_real(a: &Op, s: f64) -> Op {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn commutator(a: &Op, b: &Op) -> Op {
    a * b - b * a
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &Op, b: &Op) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn hermitian_deviation(a: &Op) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(a: &Op, tol: f64) -> Result<()> {
    let deviation = hermitian_deviation(a);
    if deviation > tol || !deviation.is_finite() {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(a: &Op) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    match a.singular_values() {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => frobenius(a),
    }
}

/// Operator norm of a Hermitian matrix, `max |λ|`.
pub fn hermitian_norm(a: &Op) -> f64 {
    match a.self_adjoint_eigenvalues(Side::Lower) {
        Ok(ev) => ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs())),
        Err(_) => op_norm(a),
    }
}

pub fn frobenius(a: &Op) -> f64 {
    a.norm_l2()
}

pub fn trace(a: &Op) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// `exp(i t h)` for Hermitian `h`, computed in the eigenbasis so the result is
/// unitary to machine precision.
pub fn expm_i_hermitian(h: &Op, t: f64) -> Result<Op> {
    let dim = h.nrows();
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    let phased = Mat::from_fn(dim, dim, |i, j| u[(i, j)] * c64::cis(t * s[j].re));
    Ok(&phased * u.adjoint())
}

/// Unitary factor of the polar decomposition `a = W P`, i.e. `W = U V†` from
/// the SVD. This is the unitary closest to `a` in every unitarily invariant norm.
pub fn polar_unitary(a: &Op) -> Result<Op> {
    let svd = a.svd().map_err(|e| Error::Eigensolver(format!("svd: {e:?}")))?;
    Ok(svd.U() * svd.V().adjoint())
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm(a: &Op) -> f64 {
    a.singular_values()
        .map(|s| s.iter().sum())
        .unwrap_or(f64::NAN)
}

/// `‖U†U − I‖_max`.
pub fn unitarity_defect(u: &Op) -> f64 {
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &identity(u.nrows()))
}

pub fn inner(a: &State, b: &State) -> c64 {
    assert_eq!(a.nrows(), b.nrows());
    (0..a.nrows()).map(|i| a[i].conj() * b[i]).sum()
}

pub fn norm(a: &State) -> f64 {
    (0..a.nrows()).map(|i| a[i].norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(a: &State) -> State {
    let n = norm(a);
    Col::from_fn(a.nrows(), |i| a[i] / n)
}

pub fn basis_state(dim: usize, index: usize) -> State {
    Col::from_fn(dim, |i| if i == index { ONE } else { ZERO })
}

pub fn expectation(op: &Op, psi: &State) -> c64 {
    let v = op * psi;
    inner(psi, &v)
}

/// Number of qubits for a power-of-two dimension.
pub fn qubits_of(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Dimension(format!("{dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Apply `op` (acting on `k` contiguous sites starting at `lo`) to an `n`-site
/// state without forming the full operator.
pub fn apply_local(psi: &State, n: usize, op: &Op, lo: usize) -> Result<State> {
    let k = qubits_of(op.nrows())?;
    if op.ncols() != op.nrows() || lo + k > n || psi.nrows() != 1usize << n {
        return Err(Error::Dimension(format!(
            "cannot apply a {k}-site operator at site {lo} of a {n}-site state of length {}",
            psi.nrows()
        )));
    }
    let mid = 1usize << k;
    let right = 1usize << (n - lo - k);
    let left = 1usize << lo;
    let mut out = Col::zeros(psi.nrows());
    let mut buf = vec![ZERO; mid];
    for l in 0..left {
        for r in 0..right {
            let base = l * mid * right + r;
            for (a, slot) in buf.iter_mut().enumerate() {
                *slot = psi[base + a * right];
            }
            for b in 0..mid {
                let mut acc = ZERO;
                for (a, value) in buf.iter().enumerate() {
                    acc += op[(b, a)] * value;
                }
                out[base + b * right] = acc;
            }
        }
    }
    Ok(out)
}
