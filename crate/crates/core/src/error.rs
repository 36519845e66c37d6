use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("label {label} out of range 1..={d}")]
    LabelOutOfRange { label: u32, d: usize },

    #[error("degree {degree} exceeds the supported cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("time {0} is not on the sample grid")]
    OffGrid(f64),

    #[error("sample times must be strictly increasing (row {row})")]
    NonIncreasingTimes { row: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("linear system: {0}")]
    LinearSystem(String),

    #[error("refinement is not Cauchy: gap {gap:e} exceeds tolerance {tol:e}")]
    NonCauchy { gap: f64, tol: f64 },

    #[error("shuffle relation violated by {defect:e} on words {w1:?}, {w2:?}")]
    ShuffleViolation { w1: Vec<usize>, w2: Vec<usize>, defect: f64 },
}
