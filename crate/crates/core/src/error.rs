use thiserror::Error;

use crate::vi_solver::TraceEntry;

/// Errors raised across the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The exponent does not describe a smooth, strictly convex, reflexive l_p space.
    #[error("unsupported space: exponent p = {p} must satisfy 1 < p < inf")]
    UnsupportedSpace { p: f64 },

    #[error("shape mismatch: expected dimension {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("unsupported retraction: {0}")]
    UnsupportedRetraction(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// An iterate became non-finite. The trace up to that point is attached.
    #[error("iteration diverged at step {iteration}")]
    Divergence {
        iteration: usize,
        trace: Vec<TraceEntry>,
    },

    #[error("unsupported oracle instance: {0}")]
    UnsupportedOracle(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}
