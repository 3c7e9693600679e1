use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pressure law domain error: {0}")]
    Domain(String),

    #[error("equilibrium admissibility condition {condition} failed: {detail}")]
    Admissibility { condition: usize, detail: String },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("bracketing error: {0}")]
    Bracket(String),

    #[error("state validity error: {0}")]
    InvalidState(String),

    #[error("geometry breakdown: {0}")]
    GeometryBreakdown(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
