//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sequence of length {len} exceeds max_seq_len {max}")]
    SeqOverflow { len: usize, max: usize },

    #[error("no maskable position in batch")]
    NoMaskablePosition(),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("no rateable pairs (all items single-rated)")]
    NoPairs,

    #[error("rater oracle failure: {0}")]
    OracleFailure(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
