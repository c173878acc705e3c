use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is not a prime below 2^16")]
    InvalidModulus(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("entry count {got} does not match {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, got: usize },

    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("index set must be strictly increasing")]
    UnorderedIndexSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a Laplacian: row {row} sums to {sum}")]
    NotLaplacian { row: usize, sum: String },

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}
