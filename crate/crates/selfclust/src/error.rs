//! Crate-wide error type.
//!
//! Variants are grouped by how the CLI maps them to exit codes: anything that
//! stems from bad input data or parameters is a data error (exit 2), while a
//! broken runtime invariant (exit 3) means the engine itself went wrong and
//! the run must not be trusted.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed input files: bad magic numbers, truncated payloads,
    /// inconsistent image sizes, unreadable images.
    #[error("format: {0}")]
    Format(String),

    /// Parameter or precondition violations (bad k, delta out of range, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Shape disagreements between matrices, label vectors, centroids.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// Learner training produced non-finite parameters or could not proceed.
    #[error("training failure: {0}")]
    Train(String),

    /// A runtime invariant of the self-training loop was violated.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub fn dim(msg: impl Into<String>) -> Self {
        Error::DimMismatch(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
