use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature failed: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("grid too coarse on axis {axis}: {points} points, need at least {required}")]
    GridTooCoarse {
        axis: usize,
        points: usize,
        required: usize,
    },

    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit unstable: residual {residual:e} exceeds {threshold:e}")]
    FitUnstable { residual: f64, threshold: f64 },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("multiplier evaluation failed at k = {k:?}: {source}")]
    AtIndex { k: Vec<i64>, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
