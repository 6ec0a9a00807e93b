use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("argument out of domain: {0}")]
    Domain(&'static str),
    #[error("contract violation: {0}")]
    Contract(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
