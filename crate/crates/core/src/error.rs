use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Requested register size is outside what the dense engine supports.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A gate names an out-of-range or repeated qubit, or is otherwise malformed.
    #[error("gate error: {0}")]
    Gate(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Circuit document could not be decoded.
    #[error("parse error at gate {index:?}: {message}")]
    Parse { index: Option<usize>, message: String },

    /// A value decoded fine but violates a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested state has no basis strings in its support.
    #[error("empty support: {0}")]
    EmptySupport(String),

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence at step {step}: {message}")]
    Convergence { step: usize, message: String },

    #[error("no bracket: {0}")]
    NoBracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
