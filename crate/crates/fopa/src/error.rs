use thiserror::Error;

pub type Result<T> = std::result::Result<T, FopaError>;

#[derive(Debug, Error)]
pub enum FopaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid coverage: {0}")]
    GridCoverage(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The truncated series cannot deliver the requested accuracy; raising
    /// the truncation order is the only fix, so this is an explicit error
    /// rather than a silently inaccurate number.
    #[error("truncation insufficient for {context}: tail estimate {tail:.3e} exceeds {threshold:.1e} of the total")]
    TruncationInsufficient {
        context: String,
        tail: f64,
        threshold: f64,
    },

    #[error("undefined optimum: {0}")]
    UndefinedOptimum(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),
}

impl FopaError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        FopaError::InvalidArgument(msg.into())
    }
}
