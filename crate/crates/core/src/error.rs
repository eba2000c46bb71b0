use thiserror::Error;

/// Errors produced by the decomposition engine and its helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("snapshot rejected: {0}")]
    Snapshot(String),
    #[error("out-of-order event for key `{key}`: expected seq {expected}, got {got}")]
    OutOfOrder { key: String, expected: u64, got: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
