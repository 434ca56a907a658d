//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite entries, malformed parameters, inconsistent shapes.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An eigenvalue fell below the PSD clamping tolerance.
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    /// Moment computations need at least two particles.
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// CSV parse failure, located by (1-based) row and column.
    #[error("{path}: row {row}, column {col}: {msg}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        msg: String,
    },

    /// Brute-force oracles refuse instances beyond their enumeration limits.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// The transportation solver hit its pivot cap without reaching optimality.
    #[error("solver failed to converge: {0}")]
    NonConvergence(String),

    /// Inputs on which the requested statistic is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Too many replicate failures, or an invalid experiment configuration.
    #[error("experiment run failed: {0}")]
    RunFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
