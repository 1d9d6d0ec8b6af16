//! Error type shared by the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("series diverges: {0}")]
    DivergentSeries(String),

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite field at t = {time:.6}, step {step}, max|alpha| = {max_abs:.3e}")]
    NonFinite { time: f64, step: u64, max_abs: f64 },

    #[error("not enough snapshots in window: found {found}, need {need}")]
    InsufficientSnapshots { found: usize, need: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
