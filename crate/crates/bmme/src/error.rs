use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("degenerate baseline: rank-one row-mean fit is exact, relative error undefined")]
    DegenerateBaseline,

    #[error("bisection failed for column {column}: {detail}")]
    BisectionFailure { column: usize, detail: String },

    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),
}

pub type Result<T> = std::result::Result<T, Error>;
