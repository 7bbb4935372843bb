use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the closed domain {domain}")]
    OutsideDomain { domain: String, point: Vec<f64> },
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("{operation} is not supported on {domain}")]
    Unsupported { domain: String, operation: &'static str },
    #[error("inconsistent configuration: {0}")]
    Config(String),
    #[error("numerical refusal: {0}")]
    Refusal(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
