//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by constructors, solvers and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The network parameters violate a basic invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A cross-gain of exactly zero was supplied.
    #[error("nonzero cross-gain required")]
    ZeroGain,

    /// Vector or matrix sizes do not agree with the instance.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A 1-based index fell outside `1..=k`.
    #[error("index {index} out of range 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },

    /// An operation was called outside its documented domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested construction does not apply to this instance.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A plan or recipe is structurally inconsistent.
    #[error("structural failure: {0}")]
    Structural(String),

    /// A numerical solve did not reach the required accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Text input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
