use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FppError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid distribution or experiment parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The finite window cannot stand in for the infinite lattice here.
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("capacity exceeded at n = {n}: window needs {vertices} vertices (limit {limit})")]
    Capacity { n: u64, vertices: usize, limit: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FppError>;
