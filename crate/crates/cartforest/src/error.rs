//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A cell could not be parsed with the declared column kind.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// The target column has a missing value.
    #[error("missing target value at row {row}")]
    TargetMissing { row: usize },

    /// Schema and data disagree (unknown column, kind mismatch, ...).
    #[error("schema error: {0}")]
    Schema(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested computation is undefined on this input
    /// (e.g. OOB error with no out-of-bag rows).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A model file is malformed or incompatible.
    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
