use alloc::string::String;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains a non-finite value at node {0}")]
    NonFiniteValue(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("derivative order {0} is not one of 1, 2, 3, 4")]
    InvalidDerivativeOrder(u8),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("mollifier time must be nonnegative, got {0}")]
    NegativeMollifierTime(f64),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite value in term `{term}`")]
    NonFiniteTerm { term: &'static str },
    #[error("{field} is negative at node {index} ({value:e}) beyond the positivity tolerance")]
    NegativeValue {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("clipped mass {clipped:e} exceeds the allowed {limit:e}")]
    ExcessiveClipping { clipped: f64, limit: f64 },
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("invalid run setup: {0}")]
    InvalidSetup(String),
}
