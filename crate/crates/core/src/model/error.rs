use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("invalid label vector: {0}")]
    InvalidLabel(String),
    #[error("{learner} fit failed: {cause}")]
    FitFailure { learner: String, cause: String },
    #[error("degenerate denominator: |b| = {b:e} is within EPS_DENOM (a = {a})")]
    DegenerateDenominator { a: f64, b: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
