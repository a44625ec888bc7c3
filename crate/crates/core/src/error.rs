use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty field")]
    EmptyField,

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("drift evaluated at singular point {0:?}")]
    SingularPoint(Vec<f64>),

    #[error("CFL violation: dt = {dt} exceeds limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("stability violation: {0}")]
    Stability(String),

    #[error("grid does not cover the mollification stencil: {0}")]
    Coverage(String),

    #[error("exponent relation violated: {0}")]
    ScalingRelation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidParameter(msg.into())
}
