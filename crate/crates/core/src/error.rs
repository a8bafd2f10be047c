use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least 2 subdivisions per axis, got {0}")]
    GridTooSmall(usize),

    #[error("field has shape {got:?}, expected ({expected}, {expected})")]
    ShapeMismatch {
        expected: usize,
        got: (usize, usize),
    },

    #[error("fields live on different grids (n = {left} vs n = {right})")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite value at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("noise scale undefined: field norm is zero")]
    NoiseScaleUndefined,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rate fit needs at least 2 positive points, got {0}")]
    TooFewPoints(usize),

    #[error("rate fit point {index} is not strictly positive: ({eps}, {err})")]
    NonPositivePoint { index: usize, eps: f64, err: f64 },

    #[error("problem has no drift potential f")]
    MissingPotential,

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
