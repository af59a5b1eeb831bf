use thiserror::Error;

#[derive(Debug, Error)]
pub enum QlrError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("kind/algo mismatch: {0}")]
    KindMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
    #[error("non-Hermitian input (max asymmetry {0:e})")]
    NonHermitian(f64),
    #[error("eigensolver did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("no feasible state: {0}")]
    Infeasible(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QlrError>;
