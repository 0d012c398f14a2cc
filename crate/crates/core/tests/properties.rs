mod common;

use chainglue::chain::{embed_operator, SupportInterval};
use chainglue::circuit::{apply_circuit_dense, dense_expectation, fidelity, local_expectation, phase_distance, Observable};
use chainglue::filter::{make_filter, FilterKind};
use chainglue::gluing::{effective_two_level, epsilon_budget};
use chainglue::linalg::{self, c64, Col};
use chainglue::locality::{fit_lr_constants, LrConstants, LrSample};
use chainglue::oracle::eigendecompose;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn light_cone_matches_dense(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_circuit(&mut rng, 10);
        let n = c.n();
        let psi = apply_circuit_dense(&c, 16).unwrap();
        prop_assert!((linalg::norm(&psi) - 1.0).abs() < 1e-9);
        for _ in 0..3 {
            let obs = common::random_observable(&mut rng, n);
            let local = local_expectation(&c, &obs, 16).unwrap();
            let dense = dense_expectation(&psi, n, &obs, 0).unwrap();
            prop_assert!((local.value - dense).abs() < 1e-10);
            // Every absorbed stage meets the final region.
            prop_assert!(local.cone.stages.iter().all(|&i| c.stages[i].support.intersects(&local.cone.region)));
        }
    }

    #[test]
    fn apply_local_agrees_with_embedding(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 1 + (seed as usize) % n.min(3);
        let lo = (seed as usize / 7) % (n - w + 1);
        let op = common::random_hermitian(&mut rng, 1 << w);
        let psi = common::random_state(&mut rng, 1 << n);
        let a = linalg::apply_local(&psi, n, &op, lo).unwrap();
        let b = &embed_operator(&op, SupportInterval { lo, hi: lo + w - 1 }, n).unwrap() * &psi;
        let diff = (0..a.nrows()).map(|i| (a[i] - b[i]).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn polar_factor_is_unitary(seed in any::<u64>(), dim in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = common::random_unitary(&mut rng, dim);
        prop_assert!(linalg::unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn fidelity_is_phase_invariant(seed in any::<u64>(), phi in -3.2f64..3.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_state(&mut rng, 8);
        let b = Col::from_fn(8, |i| a[i] * c64::cis(phi));
        prop_assert!((fidelity(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        prop_assert!(phase_distance(&a, &b).unwrap() < 1e-7);
        let c = common::random_state(&mut rng, 8);
        let f = fidelity(&a, &c).unwrap();
        prop_assert!((0.0..=1.0 + 1e-14).contains(&f));
    }

    #[test]
    fn identity_observable_is_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_circuit(&mut rng, 8);
        let obs = Observable::identity(SupportInterval { lo: 0, hi: 1 });
        prop_assert!((local_expectation(&c, &obs, 16).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_level_gap_matches_its_matrix(re in -0.7f64..0.7, im in -0.7f64..0.7, theta in 0.0f64..1.58) {
        let x = c64::new(re, im);
        let (v, gap) = effective_two_level(x, theta).unwrap();
        let ev = eigendecompose(&v).unwrap().energies;
        prop_assert!((ev[1] - ev[0] - gap).abs() < 1e-12);
        prop_assert!(gap >= x.norm() - 1e-12 && gap <= 1.0 + 1e-12);
    }

    #[test]
    fn budget_is_linear_and_decreasing(g in 1.0f64..20.0, x in 0.3f64..1.0, de in 0.2f64..3.0, k in 1u32..5) {
        let lr = LrConstants { v: 1.0, kappa_lr: 1.0 };
        let n = 2usize << k;
        let a = epsilon_budget(g, x, de, n, 2, &lr, None).unwrap();
        let b = epsilon_budget(g, x, de, 2 * n, 2, &lr, None).unwrap();
        prop_assert!((b.total - 2.0 * a.total).abs() <= 1e-14 * b.total);
        let c = epsilon_budget(g * 1.5, x, de, n, 2, &lr, None).unwrap();
        prop_assert!(c.epsilon_one <= a.epsilon_one);
    }

    #[test]
    fn synthetic_lr_round_trip(v in 0.3f64..3.0, kappa in 0.3f64..4.0) {
        let c = LrConstants { v, kappa_lr: kappa };
        let mut samples = Vec::new();
        for d in 1..=6usize {
            for k in 1..=12 {
                let t = 0.02 * k as f64;
                samples.push(LrSample { t, distance: d, support_size: 1, commutator_norm: c.bound(1, d, t), bound_value: None });
            }
        }
        prop_assume!(samples.iter().filter(|s| s.commutator_norm < 0.2).count() >= 20);
        let fit = fit_lr_constants(&samples).unwrap();
        prop_assert!((fit.constants.v - v).abs() < 1e-6, "{:?}", fit);
        prop_assert!((fit.constants.kappa_lr - kappa).abs() < 1e-6, "{:?}", fit);
    }

    #[test]
    fn filter_transform_is_even_and_bounded(gamma in 0.1f64..10.0, w in -5.0f64..5.0) {
        for kind in [FilterKind::Gaussian, FilterKind::CompactBump] {
            let f = make_filter(kind, gamma).unwrap();
            prop_assert!((f.chi_hat(w) - f.chi_hat(-w)).abs() < 1e-12);
            prop_assert!(f.chi_hat(w) <= 1.0 + 1e-12);
            prop_assert!((f.chi_hat(0.0) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn support_interval_algebra(a in 0usize..10, b in 0usize..10, c in 0usize..10, d in 0usize..10) {
        let x = SupportInterval { lo: a.min(b), hi: a.max(b) };
        let y = SupportInterval { lo: c.min(d), hi: c.max(d) };
        let h = x.hull(&y);
        prop_assert!(h.lo <= x.lo && h.hi >= y.hi.max(x.hi));
        prop_assert_eq!(x.intersects(&y), y.intersects(&x));
        prop_assert_eq!(x.distance(&y), y.distance(&x));
        prop_assert_eq!(x.distance(&y) == 0, x.intersects(&y));
    }
}
