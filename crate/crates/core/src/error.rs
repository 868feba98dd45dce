use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent p = {0} is out of range, expected p > 1")]
    InvalidExponent(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("malformed tree: {0}")]
    Structure(String),

    #[error("level {level} is outside 0..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature did not reach tolerance {tol:e} within {budget} subdivisions")]
    Quadrature { tol: f64, budget: usize },

    #[error("tree would have {leaves} leaves, above the enumeration cap of {cap}")]
    EnumerationCap { leaves: u128, cap: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("multipliers are not predictable: siblings under node {0} disagree")]
    NotPredictable(usize),

    #[error("the two processes live on different trees")]
    TreeMismatch,

    #[error("parse error at {at}: {msg}")]
    Parse { at: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
