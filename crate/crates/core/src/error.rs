use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid point ({x}, {y}, {z}): the upper half-space requires finite coordinates and z > 0")]
    InvalidPoint { x: f64, y: f64, z: f64 },

    #[error("point coincides with center {index} (distance {distance:e})")]
    AtCenter { index: usize, distance: f64 },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("custom gauge is inconsistent: {0}")]
    InconsistentGauge(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("finite-difference stencil leaves the chart domain at {0:?}")]
    StepTooLarge([f64; 4]),

    #[error("{0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
