//! Quasi-adiabatic gluing of gapped one-dimensional spin-chain ground states.

pub mod adiabatic;
pub mod chain;
pub mod circuit;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod gluing;
pub mod linalg;
pub mod locality;
pub mod oracle;

pub use error::{Error, Result};
