//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("field error: {0}")]
    Field(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("linear system has no solution: {0}")]
    NoSolution(String),
    #[error("document error: {0}")]
    Document(String),
}

impl CoreError {
    pub fn validation(msg: impl Into<String>) -> CoreError {
        CoreError::Validation(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> CoreError {
        CoreError::Shape(msg.into())
    }
}
