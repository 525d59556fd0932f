use std::io;

use thiserror::Error;

/// Every fallible toolkit operation reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, channel counts or resolutions disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A scalar parameter lies outside its admissible range.
    #[error("value out of domain: {0}")]
    Domain(String),
    /// Input violates an operation precondition (empty mesh, soft mask, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Non-finite or otherwise unusable numeric data.
    #[error("invalid data: {0}")]
    Data(String),
    /// Malformed binary container.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    /// Structurally valid document with inconsistent contents.
    #[error("schema error: {0}")]
    Schema(String),
    /// A score cannot be computed for the given inputs.
    #[error("undefined score: {0}")]
    Undefined(String),
    /// Invalid synthetic scene description.
    #[error("scene error: {0}")]
    Scene(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
