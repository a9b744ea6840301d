use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("missing operand for `{0}`")]
    ArityUnderflow(String),

    #[error("trailing tokens after expression: `{0}`")]
    TrailingTokens(String),

    #[error("invalid numeric literal `{0}`")]
    BadLiteral(String),

    #[error("variable x{index} out of range for k = {k}")]
    VariableOutOfRange { index: usize, k: usize },

    #[error("arity mismatch: `{symbol}` expects {expected} children, got {actual}")]
    Arity {
        symbol: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("gradient/tape does not match network topology")]
    TapeMismatch,

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("bad cell at row {row}, column {column}: {reason}")]
    BadCell {
        row: usize,
        column: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
