use thiserror::Error;

/// Errors raised by the numerical and statistical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("non-finite integrand value {value} at node x = {node}")]
    Evaluation { node: f64, value: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
