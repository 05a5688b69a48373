use thiserror::Error;

/// Errors raised by the inference pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("singular design: columns {columns:?} are linearly dependent on the others")]
    SingularDesign { columns: Vec<usize> },

    #[error("lasso did not converge after {iterations} sweeps (max change {max_change:e})")]
    NoConvergence { iterations: usize, max_change: f64 },

    #[error("zero residual variance: pivot is degenerate")]
    ZeroVariance,

    #[error("coordinate {0} was never selected")]
    NotAvailable(usize),

    #[error("empty selection: refit is undefined")]
    EmptySelection,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
