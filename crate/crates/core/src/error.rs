use thiserror::Error;

/// Errors raised by the solvers and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("degenerate density: total mass is zero")]
    DegenerateDensity,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("kernel gradient singular at origin; mass-coupled solver requires q>1 (got q={0})")]
    SingularKernelGradient(f64),

    #[error("mass equation unsolvable; density concentrating — reduce ε or use renormalize mode")]
    MassEquationUnsolvable,

    #[error("transport map not invertible; reduce B or damping")]
    MapNotInvertible,

    #[error("mass mismatch: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("no records in domain")]
    NoRecordsInDomain,

    #[error("solver did not converge for eps = {0:?}")]
    NotConverged(Vec<f64>),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty field")]
    EmptyField,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
