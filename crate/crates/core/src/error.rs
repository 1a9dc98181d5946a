//! Error type shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or corrupt input that should have been well-formed
    /// (WAV header, model file, manifest row).
    #[error("parse error: {0}")]
    Parse(String),

    /// The input is syntactically valid but uses an encoding this
    /// toolkit does not handle (e.g. compressed WAV).
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// Empty or too-short input where at least one unit of data is required.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A configuration value violates its documented range.
    #[error("invalid params: {0}")]
    InvalidParams(String),

    /// Runtime data violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A clip was loaded at a rate the caller cannot process.
    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    /// A manifest entry could not be processed; names the entry.
    #[error("manifest error: entry '{entry_id}': {detail}")]
    Manifest { entry_id: String, detail: String },

    /// The training time budget expired before any candidate finished.
    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn manifest(entry_id: impl Into<String>, detail: impl ToString) -> Self {
        Error::Manifest {
            entry_id: entry_id.into(),
            detail: detail.to_string(),
        }
    }
}
