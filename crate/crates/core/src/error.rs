use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("cannot renormalize a vector with zero mass")]
    EmptyMass,

    #[error("empty support")]
    EmptySupport,

    #[error("drafter and target supports do not intersect with positive mass")]
    EmptyIntersection,

    #[error("support violation: {0}")]
    Support(String),

    #[error("covariance is not positive semi-definite (pivot {pivot} at row {row})")]
    Decomposition { row: usize, pivot: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("residual distribution undefined: acceptance rate is 1")]
    DegenerateResidual,

    #[error("model error: {0}")]
    Model(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
