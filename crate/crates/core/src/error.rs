use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("inconsistent layout: {0}")]
    Inconsistent(String),

    #[error("row {row}: indices not strictly increasing at position {position}")]
    NonMonotone { row: usize, position: usize },

    #[error("row {row}: value {value} at dimension {dim} is not strictly positive")]
    NonPositive { row: usize, dim: u32, value: f64 },

    #[error("dimension {dim} out of range for dimensionality {ambient}")]
    DimensionOutOfRange { dim: u64, ambient: u64 },

    #[error("vector has zero l1 mass")]
    ZeroVector,

    #[error("empty collection")]
    EmptyCollection,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported format version {0}")]
    Version(u32),
}
