use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid data-generating process: {0}")]
    InvalidSpec(String),

    #[error("covariance is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("invalid model mask: {0}")]
    InvalidMask(String),

    #[error("model with {size} coefficients violates |m| < n - 1 for n = {n}")]
    ModelTooLarge { size: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("argument outside the domain of {statement}: {detail}")]
    Domain { statement: &'static str, detail: String },

    #[error("empty model collection")]
    EmptyCollection,

    #[error("invalid block partition: {0}")]
    InvalidBlocks(String),

    #[error("numerically singular matrix: {0}")]
    Singular(String),
}

pub type Result<V> = std::result::Result<V, Error>;
