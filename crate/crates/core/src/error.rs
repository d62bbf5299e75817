use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("degenerate edge {index}: length {length:e} below guard {guard:e}")]
    DegenerateEdge { index: usize, length: f64, guard: f64 },

    #[error("field is not mean-zero (|sum|_inf = {residual:e})")]
    NotMeanZero { residual: f64 },

    #[error("covector is not sum-zero (|sum|_inf = {residual:e})")]
    NotSumZero { residual: f64 },

    #[error("edge field is not ds-mean-zero (|sum k l|_inf = {residual:e})")]
    NotDsMeanZero { residual: f64 },

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("landmarks {i} and {j} too close: distance {distance:e}")]
    DegenerateLandmarks { i: usize, j: usize, distance: f64 },

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("point lies on the curve (distance {distance:e} to edge {edge})")]
    PointOnCurve { edge: usize, distance: f64 },

    #[error("operation requires dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateEdge { .. }
                | Error::NoConvergence { .. }
                | Error::DegenerateLandmarks { .. }
        )
    }
}
