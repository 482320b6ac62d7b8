use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("sample is not centered: largest column mean {max_mean:e} exceeds tolerance {tol:e}")]
    NotCentered { max_mean: f64, tol: f64 },

    #[error("rank deficient {what}: condition number {condition:e}")]
    RankDeficient { what: String, condition: f64 },

    #[error("covariance matrix is not positive semi-definite (smallest pivot {pivot:e} after {jitter_steps} jitter steps)")]
    NotPositiveDefinite { pivot: f64, jitter_steps: usize },

    #[error("group lasso did not converge after {iterations} sweeps (KKT gap {kkt_gap:e}, tolerance {tol:e})")]
    NonConvergence { iterations: usize, kkt_gap: f64, tol: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, with replicate and context wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Replicate { source, .. } | Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
