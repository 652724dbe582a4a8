use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("non-finite sample at node {index}")]
    NonFinite { index: usize },
    #[error("direction {index} lies within 1e-9 of the line spanned by nu")]
    DirectionOnAxis { index: usize },
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T, CoreError> {
    Err(CoreError::Validation(msg.into()))
}
