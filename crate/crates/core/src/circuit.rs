//! Evaluation of [`LocalCircuit`] states.

use serde::Serialize;

use crate::chain::{check_cap, embed_operator, SupportInterval};
use crate::error::{Error, Result};
use crate::gluing::LocalCircuit;
use crate::linalg::{self, c64, Op, State};

/// Hermitian operator on a contiguous set of sites.
#[derive(Clone, Debug)]
pub struct Observable {
    pub matrix: Op,
    pub support: SupportInterval,
}

impl Observable {
    pub fn new(matrix: Op, support: SupportInterval) -> Result<Self> {
        if matrix.nrows() != 1 << support.width() || matrix.ncols() != matrix.nrows() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix on {} sites",
                matrix.nrows(),
                matrix.ncols(),
                support.width()
            )));
        }
        linalg::ensure_hermitian(&matrix, 1e-12)?;
        Ok(Self { matrix, support })
    }

    pub fn identity(support: SupportInterval) -> Self {
        Self {
            matrix: linalg::identity(1 << support.width()),
            support,
        }
    }
}

/// `W·|Ω_m⟩^{⊗copies}` as a dense vector.
pub fn apply_circuit_dense(circuit: &LocalCircuit, cap: usize) -> Result<State> {
    let n = circuit.n();
    if n > cap {
        return Err(Error::InvalidArgument(format!(
            "{n} sites exceeds the cap of {cap}; use local_expectation for local observables"
        )));
    }
    circuit.validate()?;
    let blocks = vec![circuit.base_block_state.clone(); circuit.copies];
    let mut psi = crate::chain::product_state(&blocks);
    for stage in &circuit.stages {
        psi = linalg::apply_local(&psi, n, &stage.unitary, stage.support.lo)?;
    }
    Ok(psi)
}

/// Stages causally connected to `support`, in circuit order, and the block
/// aligned region they span.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LightCone {
    pub stages: Vec<usize>,
    pub region: SupportInterval,
}

/// Walk the stages backwards, absorbing every stage that meets the current
/// region, then widen the region to whole blocks.
pub fn light_cone(circuit: &LocalCircuit, support: SupportInterval) -> Result<LightCone> {
    let n = circuit.n();
    if support.hi >= n {
        return Err(Error::InvalidArgument(format!("support {support:?} outside {n} sites")));
    }
    let mut region = support;
    let mut stages = Vec::new();
    for (i, st) in circuit.stages.iter().enumerate().rev() {
        if st.support.intersects(&region) {
            region = region.hull(&st.support);
            stages.push(i);
        }
    }
    stages.reverse();
    let m = circuit.m;
    let region = SupportInterval {
        lo: region.lo / m * m,
        hi: (region.hi / m + 1) * m - 1,
    };
    Ok(LightCone { stages, region })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalValue {
    pub value: f64,
    pub cone: LightCone,
}

/// `⟨ψ|O|ψ⟩` from the dense state of the light-cone region only.
pub fn local_expectation(circuit: &LocalCircuit, obs: &Observable, cap: usize) -> Result<LocalValue> {
    circuit.validate()?;
    let cone = light_cone(circuit, obs.support)?;
    let width = cone.region.width();
    check_cap(width, cap)?;
    let blocks = vec![circuit.base_block_state.clone(); width / circuit.m];
    let mut psi = crate::chain::product_state(&blocks);
    for &i in &cone.stages {
        let st = &circuit.stages[i];
        psi = linalg::apply_local(&psi, width, &st.unitary, st.support.lo - cone.region.lo)?;
    }
    log::debug!(
        "light cone of {:?}: {} of {} stages on {} sites",
        obs.support,
        cone.stages.len(),
        circuit.stages.len(),
        width
    );
    let value = dense_expectation(&psi, width, obs, cone.region.lo)?;
    Ok(LocalValue { value, cone })
}

/// `⟨ψ|O|ψ⟩` for a dense state on `n` sites whose first site is `offset`.
pub fn dense_expectation(psi: &State, n: usize, obs: &Observable, offset: usize) -> Result<f64> {
    if obs.support.lo < offset || obs.support.hi >= offset + n {
        return Err(Error::InvalidArgument(format!("observable support {:?} outside the state", obs.support)));
    }
    let o_psi = linalg::apply_local(psi, n, &obs.matrix, obs.support.lo - offset)?;
    let z = linalg::inner(psi, &o_psi);
    if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("expectation has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

/// Dense operator of an observable on `n` sites.
pub fn observable_operator(obs: &Observable, n: usize) -> Result<Op> {
    embed_operator(&obs.matrix, obs.support, n)
}

fn same_dim(a: &State, b: &State) -> Result<c64> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!("states of length {} and {}", a.nrows(), b.nrows())));
    }
    Ok(linalg::inner(a, b))
}

/// `|⟨a|b⟩|`.
pub fn fidelity(a: &State, b: &State) -> Result<f64> {
    Ok(same_dim(a, b)?.norm())
}

/// `min_φ ‖a − e^{iφ} b‖ = √(2 − 2|⟨a|b⟩|)` for unit vectors.
pub fn phase_distance(a: &State, b: &State) -> Result<f64> {
    Ok((2.0 - 2.0 * same_dim(a, b)?.norm()).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::product_state;
    use crate::gluing::{GluingStage, StageReport};
    use crate::linalg::{basis_state, pauli_x, pauli_z, Col, Mat};

    fn plus() -> State {
        linalg::normalized(&Col::from_fn(4, |_| c64::new(1.0, 0.0)))
    }

    fn stage(lo: usize, hi: usize, u: Op) -> GluingStage {
        GluingStage {
            level: 1,
            block_size: 2,
            seam: lo + 1,
            alpha: None,
            gamma: 1.0,
            unitary: u,
            support: SupportInterval { lo, hi },
            fidelity_vs_exact: None,
            report: StageReport::default(),
        }
    }

    fn circuit(copies: usize, stages: Vec<GluingStage>) -> LocalCircuit {
        LocalCircuit {
            m: 2,
            copies,
            base_block_state: plus(),
            stages,
            budget: None,
        }
    }

    #[test]
    fn empty_and_identity_circuits() {
        let c = circuit(3, vec![]);
        let want = product_state(&[plus(), plus(), plus()]);
        assert_eq!(fidelity(&apply_circuit_dense(&c, 16).unwrap(), &want).unwrap(), 1.0);
        let c = circuit(3, vec![stage(1, 2, linalg::identity(4))]);
        assert!(phase_distance(&apply_circuit_dense(&c, 16).unwrap(), &want).unwrap() < 1e-12);
        assert!(apply_circuit_dense(&c, 4).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let a = basis_state(4, 1);
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &basis_state(4, 2)).unwrap(), 0.0);
        let rotated = Col::from_fn(4, |i| a[i] * c64::cis(0.7));
        assert!((fidelity(&a, &rotated).unwrap() - 1.0).abs() < 1e-15);
        assert!(phase_distance(&a, &rotated).unwrap() < 1e-7);
        assert!(fidelity(&a, &basis_state(8, 0)).is_err());
    }

    #[test]
    fn hand_built_three_level_cone() {
        // Blocks of 2 sites, 8 copies; one stage per seam per level.
        let u = |w: usize| linalg::expm_i_hermitian(&embed_operator(&linalg::kron(&pauli_x(), &pauli_x()), SupportInterval { lo: 0, hi: 1 }, w).unwrap(), 0.3).unwrap();
        let mut stages = Vec::new();
        for seam in [2, 6, 10, 14] {
            stages.push(stage(seam - 1, seam, u(2)));
        }
        for seam in [4, 12] {
            stages.push(stage(seam - 2, seam + 1, u(4)));
        }
        stages.push(stage(7, 8, u(2)));
        let c = circuit(8, stages);
        let cone = light_cone(&c, SupportInterval::single(0)).unwrap();
        assert!(cone.stages.is_empty());
        assert_eq!(cone.region, SupportInterval { lo: 0, hi: 1 });
        let cone = light_cone(&c, SupportInterval::single(1)).unwrap();
        assert_eq!(cone.stages, vec![0]);
        assert_eq!(cone.region, SupportInterval { lo: 0, hi: 3 });
        let cone = light_cone(&c, SupportInterval::single(8)).unwrap();
        assert_eq!(cone.stages, vec![6]);
        assert_eq!(cone.region, SupportInterval { lo: 6, hi: 9 });
        let cone = light_cone(&c, SupportInterval::single(5)).unwrap();
        assert_eq!(cone.stages, vec![0, 1, 4]);
        assert_eq!(cone.region, SupportInterval { lo: 0, hi: 7 });
        let dense = apply_circuit_dense(&c, 16).unwrap();
        for site in [0, 1, 5, 8, 15] {
            let obs = Observable::new(pauli_z(), SupportInterval::single(site)).unwrap();
            let local = local_expectation(&c, &obs, 16).unwrap().value;
            assert!((local - dense_expectation(&dense, 16, &obs, 0).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn disconnected_observable_sees_the_block() {
        let c = circuit(3, vec![stage(3, 4, linalg::expm_i_hermitian(&linalg::kron(&pauli_z(), &pauli_x()), 0.4).unwrap())]);
        let obs = Observable::new(linalg::kron(&pauli_x(), &pauli_x()), SupportInterval { lo: 0, hi: 1 }).unwrap();
        let v = local_expectation(&c, &obs, 16).unwrap();
        assert!(v.cone.stages.is_empty());
        let block = dense_expectation(&plus(), 2, &obs, 0).unwrap();
        assert!((v.value - block).abs() < 1e-14);
        assert!((local_expectation(&c, &Observable::identity(obs.support), 16).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn observables_must_be_hermitian() {
        let bad = Mat::from_fn(2, 2, |i, j| if i < j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        assert!(Observable::new(bad, SupportInterval::single(0)).is_err());
        assert!(Observable::new(pauli_z(), SupportInterval { lo: 0, hi: 1 }).is_err());
    }
}
