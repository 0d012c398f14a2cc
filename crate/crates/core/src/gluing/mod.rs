//! Gluing of block ground states through an ancilla-controlled sweep.
//!
//! A chain split at `m` is augmented with an ancilla spin `C′` between sites
//! `m − 1` and `m`. Rotating the polarizer on `C′` from `θ = 0` to `θ = π/2`
//! carries `|0⟩|Ω_A⟩|Ω_B⟩` to `|1⟩|Ω_H⟩`; the quasi-adiabatic version of that
//! sweep, optionally truncated to a window around the seam, is reduced to a
//! unitary on the chain. Repeating the step on doubled blocks gives a
//! [`LocalCircuit`].

pub mod ancilla;
pub mod recursion;
pub mod split;
pub mod stage;

pub use ancilla::{build_ancilla_path, effective_two_level, AncillaPath, AncillaSystem};
pub use recursion::{epsilon_budget, iterate_gluing, EpsilonBudget, GluingBudget};
pub use split::{split, split_terms, split_with_blocks, SplitSystem};
pub use stage::{glue_once, truncation_distance, unitary_truncation_check, Alpha, EngineParams, GlueOutcome, StepPolicy, TruncationRow};

use serde::{Deserialize, Serialize};

use crate::chain::SupportInterval;
use crate::error::{Error, Result};
use crate::linalg::{c64, Col, Mat, Op, State};

/// Version written to and required from circuit documents.
pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

/// Diagnostics of one seam sweep.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StageReport {
    /// Weight of the ancilla on `|1⟩` after the sweep (the kept branch).
    pub ancilla_weight: f64,
    /// Weight left on `|0⟩`.
    pub ancilla_weight_zero: f64,
    /// `|⟨Ω_H|φ⟩|` of the measured-and-renormalized branch.
    pub projected_fidelity: f64,
    /// `⟨Ω_H|ρ|Ω_H⟩` for the state with the ancilla traced out.
    pub trace_out_fidelity: f64,
    /// `|⟨1, Ω_H|W|0, ψ⟩|` on the augmented chain.
    pub sweep_fidelity: f64,
    pub steps: usize,
    pub converged: bool,
    pub step_history: Vec<(usize, f64)>,
    pub x_used: f64,
    pub kappa: f64,
    pub delta_e: f64,
}

/// One seam unitary of a [`LocalCircuit`].
#[derive(Clone, Debug)]
pub struct GluingStage {
    pub level: usize,
    /// Size of each of the two blocks joined at this seam.
    pub block_size: usize,
    /// First site of the right block.
    pub seam: usize,
    /// `None` for the untruncated generator.
    pub alpha: Option<usize>,
    pub gamma: f64,
    /// Unitary on `support`, sites in increasing order.
    pub unitary: Op,
    pub support: SupportInterval,
    pub fidelity_vs_exact: Option<f64>,
    pub report: StageReport,
}

/// `W·|Ω_m⟩^{⊗copies}` with `W` the ordered product of stage unitaries.
#[derive(Clone, Debug)]
pub struct LocalCircuit {
    pub m: usize,
    pub copies: usize,
    pub base_block_state: State,
    pub stages: Vec<GluingStage>,
    pub budget: Option<GluingBudget>,
}

impl LocalCircuit {
    pub fn n(&self) -> usize {
        self.m * self.copies
    }

    /// Number of complex entries stored across stage unitaries and the block.
    pub fn storage(&self) -> usize {
        self.base_block_state.nrows() + self.stages.iter().map(|s| s.unitary.nrows() * s.unitary.ncols()).sum::<usize>()
    }

    /// Check the structural invariants of the representation.
    pub fn validate(&self) -> Result<()> {
        if self.base_block_state.nrows() != 1 << self.m {
            return Err(Error::Dimension(format!(
                "block state has {} entries, expected 2^{}",
                self.base_block_state.nrows(),
                self.m
            )));
        }
        let n = self.n();
        for (i, st) in self.stages.iter().enumerate() {
            if st.support.hi >= n || st.support.lo > st.support.hi {
                return Err(Error::InvalidArgument(format!("stage {i} support {:?} outside {n} sites", st.support)));
            }
            let dim = 1usize << st.support.width();
            if st.unitary.nrows() != dim || st.unitary.ncols() != dim {
                return Err(Error::Dimension(format!("stage {i} unitary does not match its support")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CircuitDocument {
            schema_version: CIRCUIT_SCHEMA_VERSION,
            m: self.m,
            copies: self.copies,
            base_block_state: (0..self.base_block_state.nrows()).map(|i| pair(self.base_block_state[i])).collect(),
            stages: self
                .stages
                .iter()
                .map(|s| StageDocument {
                    level: s.level,
                    seam: s.seam,
                    block_size: s.block_size,
                    support: s.support,
                    gamma: s.gamma,
                    alpha: s.alpha,
                    unitary: (0..s.unitary.nrows())
                        .flat_map(|i| (0..s.unitary.ncols()).map(move |j| (i, j)))
                        .map(|(i, j)| pair(s.unitary[(i, j)]))
                        .collect(),
                    fidelity_vs_exact: s.fidelity_vs_exact,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CircuitDocument = serde_json::from_str(text)?;
        if doc.schema_version != CIRCUIT_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported circuit schema version {} (expected {CIRCUIT_SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        let base = Col::from_fn(doc.base_block_state.len(), |i| unpair(doc.base_block_state[i]));
        let mut stages = Vec::with_capacity(doc.stages.len());
        for (idx, s) in doc.stages.into_iter().enumerate() {
            let dim = 1usize << s.support.width();
            if s.unitary.len() != dim * dim {
                return Err(Error::Dimension(format!("stage {idx} has {} unitary entries, expected {}", s.unitary.len(), dim * dim)));
            }
            stages.push(GluingStage {
                level: s.level,
                block_size: s.block_size,
                seam: s.seam,
                alpha: s.alpha,
                gamma: s.gamma,
                unitary: Mat::from_fn(dim, dim, |i, j| unpair(s.unitary[i * dim + j])),
                support: s.support,
                fidelity_vs_exact: s.fidelity_vs_exact,
                report: StageReport::default(),
            });
        }
        let circuit = LocalCircuit {
            m: doc.m,
            copies: doc.copies,
            base_block_state: base,
            stages,
            budget: None,
        };
        circuit.validate()?;
        Ok(circuit)
    }
}

fn pair(z: c64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> c64 {
    c64::new(p[0], p[1])
}

/// On-disk form of a [`LocalCircuit`]; complex numbers are `[re, im]` pairs and
/// unitaries are row-major.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDocument {
    schema_version: u32,
    m: usize,
    copies: usize,
    base_block_state: Vec<[f64; 2]>,
    stages: Vec<StageDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageDocument {
    level: usize,
    seam: usize,
    block_size: usize,
    support: SupportInterval,
    gamma: f64,
    alpha: Option<usize>,
    unitary: Vec<[f64; 2]>,
    #[serde(default)]
    fidelity_vs_exact: Option<f64>,
}
