use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("{n} sites exceeds the configured cap of {cap}")]
    OverCap { n: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("ground state is degenerate or gapless (gap {gap:.3e} below tolerance {tol:.1e})")]
    Degenerate { gap: f64, tol: f64 },

    #[error("gap collapsed to {gap:.3e} at s = {s}")]
    GapCollapse { s: f64, gap: f64 },

    #[error("endpoint validation failed at {endpoint}: {detail}")]
    Endpoint { endpoint: &'static str, detail: String },

    #[error("ancilla projection weight {weight:.4} is below 0.5; the sweep did not transport the ground state")]
    AncillaProjection { weight: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("stage {index} failed after {completed} completed stages: {source}")]
    Stage {
        index: usize,
        completed: usize,
        #[source]
        source: Box<Error>,
        /// Circuit made of the stages that finished.
        prefix: Box<crate::gluing::LocalCircuit>,
    },

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
