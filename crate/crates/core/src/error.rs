use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("loss value {value} lies outside [0, 1]")]
    InvalidSupport { value: f64 },

    #[error("atom probabilities sum to {sum}, expected 1")]
    InvalidProbabilities { sum: f64 },

    #[error("an instance needs at least one action")]
    EmptyInstance,

    #[error("value {value} is out of range: {what}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("epsilon must be positive for noisy mechanisms, got {0}")]
    InvalidEpsilon(f64),

    #[error("horizon must be at least 1, got {0}")]
    InvalidHorizon(u64),

    #[error("the quadrature oracle supports at most {max} actions, got {got}")]
    TooManyActions { got: usize, max: usize },

    #[error("the lower-bound family needs K >= 6, got {0}")]
    BadK(usize),

    #[error("cells vary along {varying}, not only along the requested axis {axis}")]
    AxisMismatch {
        axis: &'static str,
        varying: &'static str,
    },

    #[error("score vectors are not adjacent: coordinate {index} differs by {diff}")]
    AdjacencyViolation { index: usize, diff: f64 },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
