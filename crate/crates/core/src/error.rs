use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `+∞ − (+∞)` or `−∞ − (−∞)`, or a NaN handed in as a value.
    #[error("indeterminate extended-real value: {0}")]
    IndeterminateValue(String),

    #[error("parameter constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("point outside the coupling domain: {0}")]
    OracleDomain(String),

    #[error("non-finite iterate produced at step {k}")]
    NonFiniteIterate { k: usize },

    #[error("problem has no known saddle point")]
    MissingSaddle,

    #[error("insufficient data for rate fit: {usable} usable points, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("epsilon {0} outside (0, 3/π²)")]
    EpsilonOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
