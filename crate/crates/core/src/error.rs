//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (bad point, bad shape,
    /// out-of-range parameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Mismatched product structure or vector dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed binary artifact. `offset` is the byte position of the
    /// offending record or field.
    #[error("format error in {path} at offset {offset}: {msg}")]
    Format {
        path: String,
        offset: u64,
        msg: String,
    },

    /// Malformed text input (datasets, word lists, text models).
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A model header does not match what the caller required.
    #[error("model header mismatch: {field} is {found}, expected {expected}")]
    HeaderMismatch {
        field: &'static str,
        expected: String,
        found: String,
    },

    /// Training produced a non-finite loss; reports the offending entry and
    /// the norms of the two points involved.
    #[error(
        "non-finite loss at entry ({i}, {j}): target norm {target_norm}, context norm {context_norm}"
    )]
    NanLoss {
        i: u32,
        j: u32,
        target_norm: f64,
        context_norm: f64,
    },

    /// An operation that needs candidates (nearest-neighbor search, set
    /// selection, evaluation) was left with none.
    #[error("empty input: {0}")]
    Empty(String),
}
