#![allow(dead_code)]

use chainglue::chain::SupportInterval;
use chainglue::circuit::Observable;
use chainglue::gluing::{GluingStage, LocalCircuit, StageReport};
use chainglue::linalg::{self, c64, Col, Mat, Op, State};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> State {
    linalg::normalized(&Col::from_fn(dim, |_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
}

pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Op {
    let g = Mat::from_fn(dim, dim, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    linalg::polar_unitary(&g).unwrap()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> Op {
    let g = Mat::from_fn(dim, dim, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    Mat::from_fn(dim, dim, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

/// Circuit of `n ≤ max_sites` sites with random block state and random
/// unitaries on random intervals of width at most 4.
pub fn random_circuit(rng: &mut ChaCha8Rng, max_sites: usize) -> LocalCircuit {
    let m = rng.gen_range(2..=3);
    let copies = rng.gen_range(2..=max_sites / m);
    let n = m * copies;
    let count = rng.gen_range(1..=8);
    let stages = (0..count)
        .map(|k| {
            let w = rng.gen_range(1..=4.min(n));
            let lo = rng.gen_range(0..=n - w);
            GluingStage {
                level: 1 + k / 3,
                block_size: m,
                seam: lo,
                alpha: None,
                gamma: 1.0,
                unitary: random_unitary(rng, 1 << w),
                support: SupportInterval { lo, hi: lo + w - 1 },
                fidelity_vs_exact: None,
                report: StageReport::default(),
            }
        })
        .collect();
    LocalCircuit {
        m,
        copies,
        base_block_state: random_state(rng, 1 << m),
        stages,
        budget: None,
    }
}

pub fn random_observable(rng: &mut ChaCha8Rng, n: usize) -> Observable {
    let w = rng.gen_range(1..=3.min(n));
    let lo = rng.gen_range(0..=n - w);
    Observable::new(random_hermitian(rng, 1 << w), SupportInterval { lo, hi: lo + w - 1 }).unwrap()
}

pub const MINIMAL_GLUE: &str = r#"
m = 2
n = 4
gamma_grid = [16.0]
gamma_units = "gap_scaled"

[model]
kind = "tfim"
coupling = 1.0
field = 1.5
"#;
