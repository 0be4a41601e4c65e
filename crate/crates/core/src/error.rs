use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("behavior schema error: {0}")]
    Schema(String),

    #[error("probability p{index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("behavior is not a valid probability box: {0}")]
    InvalidBehavior(String),

    #[error(
        "behavior violates the locality system: max residual {max_residual:e} exceeds {tol:e}"
    )]
    ConstraintViolation { max_residual: f64, tol: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("optimizer did not converge: zero residual {residual:e} exceeds tolerance {tol:e}")]
    NotConverged { residual: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty setting block (a{0}, b{1})")]
    EmptyBlock(u8, u8),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
