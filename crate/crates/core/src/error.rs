use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its documented invariant.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Vector or matrix dimensions do not agree.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    /// A value lies outside the representable range (e.g. off the grid).
    #[error("out of range: {0}")]
    Range(String),
    /// A message lost all of its mass (product of disjoint supports, underflow).
    #[error("degenerate message: {0}")]
    Degenerate(String),
    /// Malformed serialized input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Problem too large for an exhaustive routine.
    #[error("size limit exceeded: {0}")]
    Size(String),
    /// Linear algebra failure.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Non-finite or otherwise unusable input data.
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
