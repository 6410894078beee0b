use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DeformError>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(DeformError::Argument(msg.into()))
}

pub(crate) fn range<T>(msg: impl Into<String>) -> Result<T> {
    Err(DeformError::Range(msg.into()))
}
