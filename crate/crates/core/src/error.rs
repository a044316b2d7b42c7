use alloc::string::String;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition (shape, range, rank).
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The input is well-formed but carries no usable information
    /// (rank deficiency, empty off-diagonal, fully unobserved row).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A matrix entry is NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::Degenerate(msg.into())
}
