//! Reference numbers computed once with an independent dense diagonalization
//! and frozen here.

use chainglue::chain::{ChainFamily, Model, SupportInterval, DEFAULT_SITE_CAP};
use chainglue::gluing::split;
use chainglue::locality::{lr_commutator_scan, LrProbe};
use chainglue::oracle::{eigendecompose, ground_and_gap};

const TFIM_GROUND: [(usize, f64, f64); 5] = [
    (2, -3.16227766016838, 2.1622776601683795),
    (3, -4.832414787762269, 1.7796156803316454),
    (4, -6.503891557126411, 1.566416443232007),
    (6, -9.847571471154602, 1.3429469977119393),
    (8, -13.191404952188876, 1.2315475884907023),
];

/// `(n, m, |⟨Ω_A Ω_B|Ω_H⟩|, δ, ΔE)` for TFIM `J = 1`, `h = 1.5`.
const TFIM_SPLITS: [(usize, usize, f64, f64, f64); 3] = [
    (4, 2, 0.9835103966497913, 0.17933623678965116, 1.566416443232007),
    (6, 3, 0.9825338655989511, 0.18274189563006438, 1.3429469977119393),
    (8, 4, 0.9822345248116936, 0.18362183793605347, 1.2315475884907023),
];

#[test]
fn tfim_ground_energies_and_gaps() {
    for (n, e0, gap) in TFIM_GROUND {
        let d = eigendecompose(&Model::default().dense_unshifted(n, DEFAULT_SITE_CAP).unwrap()).unwrap();
        assert!((d.ground_energy() - e0).abs() < 1e-10, "n = {n}");
        assert!((d.gap() - gap).abs() < 1e-10, "n = {n}");
    }
}

#[test]
fn heisenberg_with_field() {
    let model = Model::Heisenberg {
        couplings: [1.0, 1.0, 1.0],
        field: 0.3,
    };
    let d = eigendecompose(&model.dense_unshifted(4, DEFAULT_SITE_CAP).unwrap()).unwrap();
    assert!((d.ground_energy() + 6.4641016151377535).abs() < 1e-10);
    assert!((d.gap() - 2.035674490391564).abs() < 1e-10);
}

#[test]
fn split_overlaps_offsets_and_gaps() {
    for (n, m, x, delta, de) in TFIM_SPLITS {
        let s = split(&Model::default(), n, m, DEFAULT_SITE_CAP).unwrap();
        assert!((s.overlap().norm() - x).abs() < 1e-10, "n = {n}");
        assert!((s.delta - delta).abs() < 1e-10, "n = {n}");
        assert!((s.delta_e() - de).abs() < 1e-10, "n = {n}");
    }
}

#[test]
fn shifted_family_has_zero_ground_energy() {
    let h = Model::default().build(6, DEFAULT_SITE_CAP).unwrap();
    let g = ground_and_gap(&h.dense).unwrap();
    assert!(g.energy.abs() < 1e-10);
    assert!((h.energy_shift + 9.847571471154602).abs() < 1e-10);
}

#[test]
fn tfim8_commutator_norms() {
    let h = Model::default().build(8, DEFAULT_SITE_CAP).unwrap();
    let frozen = [
        (0.1, 1, 0.0059298573570284886),
        (0.3, 1, 0.14563238489782407),
        (0.5, 1, 0.5557714914141526),
        (1.0, 1, 1.681898447528612),
        (1.0, 7, 8.853184658374249e-07),
    ];
    for (t, d, want) in frozen {
        let s = lr_commutator_scan(&h, &LrProbe::sigma_z(0), &[t], &[d]).unwrap();
        assert!((s[0].commutator_norm - want).abs() < 1e-9 * want.max(1e-3), "t = {t}, d = {d}");
    }
    // Outside the light cone at short times.
    let s = lr_commutator_scan(&h, &LrProbe::sigma_z(0), &[0.1, 0.3, 0.5], &[7]).unwrap();
    assert!(s.iter().all(|x| x.commutator_norm < 1e-9));
    assert_eq!(LrProbe::sigma_z(0).b_support(7, 8).unwrap(), SupportInterval::single(7));
}
