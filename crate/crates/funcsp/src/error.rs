use thiserror::Error;

/// Errors reported by the toolkit. Everything except `Integrity` and `Io` is
/// a usage error: the caller violated a documented precondition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} out of range 0..{size}")]
    ValueOutOfRange { value: usize, size: usize },

    #[error("relation dimensions {left}x{right} incompatible with {other_left}x{other_right}")]
    DimensionMismatch {
        left: usize,
        right: usize,
        other_left: usize,
        other_right: usize,
    },

    #[error("relation is not functional on its right variable")]
    NotFunctional,

    #[error("no constraint between variables {i} and {j}")]
    MissingConstraint { i: usize, j: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration budget exceeded: {assignments} assignments > {budget}")]
    BudgetExceeded { assignments: u128, budget: u128 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
