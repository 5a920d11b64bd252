use thiserror::Error;

/// Errors raised while reading instances, building models or driving solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid instance: {0}")]
    Invalid(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("row `{row}` references column `{column}` more than once")]
    DuplicateEntry { row: String, column: String },

    #[error("invalid bounds for `{name}`: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },

    #[error("model error: {0}")]
    Model(String),

    #[error("generator error: {0}")]
    Generator(String),

    #[error("capacity must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("no convergence after {rounds} rounds (violation {violation:e})")]
    NoConvergence { rounds: usize, violation: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
