use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("column `{column}`, row {row}: expected {expected}, found `{value}`")]
    TypeViolation {
        column: String,
        row: usize,
        expected: &'static str,
        value: String,
    },

    #[error("column `{column}`: unknown level `{value}`")]
    UnknownLevel { column: String, value: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("no rows left after removing incomplete cases")]
    EmptyResult,

    #[error("design matrix is rank deficient at term `{0}`")]
    RankDeficient(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("did not converge after {iterations} iterations (gradient max-norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures map to a distinct CLI exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::DegenerateFit(_) | Error::RankDeficient(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
