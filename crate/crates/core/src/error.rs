use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    /// The requested accuracy could not be certified; `best_bound` is the
    /// smallest bound the evaluation could guarantee.
    #[error("precision unreachable: best certified bound {best_bound:e} exceeds requested {requested:e}")]
    PrecisionUnreachable { best_bound: f64, requested: f64 },

    #[error("node budget exceeded: {required} nodes requested, budget is {budget}")]
    NodeBudget { required: u128, budget: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid operator model: {0}")]
    InvalidModel(String),

    #[error("vector does not conform to model: {0}")]
    ShapeMismatch(String),

    #[error("power {power} requested on a non-invertible component")]
    NonInvertible { power: i64 },

    #[error("measure assigns mass {mass:e} to the excluded Cayley point 1/2")]
    MassAtPole { mass: f64 },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("schema error: {0}")]
    Schema(String),
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(LabError::InvalidTolerance(tol))
    }
}
