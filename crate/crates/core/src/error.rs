use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("empty system")]
    EmptySystem,
    #[error("x not on grid: {0}")]
    XOffGrid(f64),
    #[error("y not on grid: {0}")]
    YOffGrid(f64),
    #[error("k must be nonzero")]
    ZeroK,
    #[error("fiber index {0} outside the theta grid")]
    FiberOutOfRange(i64),
    #[error("zero signal")]
    ZeroSignal,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid Gram matrix: {0}")]
    InvalidGram(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("center order must divide theta-grid (n = {n}, M = {m})")]
    CenterOrder { n: usize, m: usize },
    #[error("field not in ker P (|PF| = {0:e})")]
    NotInKernel(f64),
    #[error("degenerate field for this k")]
    DegenerateField,
    #[error("F in ker of every pi_k on this grid")]
    AllFibersZero,
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
