use thiserror::Error;

#[derive(Debug, Error)]
pub enum AsfError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid ASF: {0}")]
    InvalidAsf(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("proposition precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("ASF placement failed after {0} attempts")]
    PlacementFailed(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AsfError>;
