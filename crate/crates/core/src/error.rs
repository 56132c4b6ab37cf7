use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("outside guaranteed-uniqueness range: {0}")]
    OutsideRange(String),

    #[error("vector not in range of the embedding: residual {residual:.3e} exceeds {limit:.3e}")]
    NotInRange { residual: f64, limit: f64 },

    #[error("bound not satisfiable on the grid: {0}")]
    Unsatisfiable(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
