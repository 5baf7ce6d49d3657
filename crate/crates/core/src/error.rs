use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: [f64; 2] },

    #[error("point {point:?} is not on the boundary")]
    NotOnBoundary { point: [f64; 2] },

    #[error("derivative of the half-space profile is singular at the boundary (alpha = s = 0)")]
    SingularProfile,

    #[error("ODE profile ceases to exist: bracket {bracket} <= 0")]
    OdeBreakdown { bracket: f64 },

    #[error("grid too coarse: axis {axis} has {nodes} nodes, need at least {min}")]
    GridTooCoarse { axis: usize, nodes: usize, min: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("operation requires a two-dimensional field")]
    NeedsTwoDimensions,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("scheme failure: {0}")]
    Scheme(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
