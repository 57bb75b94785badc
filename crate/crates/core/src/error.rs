use thiserror::Error;

/// Errors raised by the estimator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A measurement coincides with a landmark center, so its bearing is undefined.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
