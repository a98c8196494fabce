//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the envlight library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed Radiance HDR data. `offset` is the byte position in the
    /// input at which parsing failed.
    #[error("hdr parse error at byte {offset}: {msg}")]
    HdrParse { offset: usize, msg: String },

    #[error("tensor format error: {0}")]
    TensorFormat(String),

    #[error("png encode error: {0}")]
    PngEncode(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A domain invariant does not hold (non-finite radiance, non-orthonormal
    /// rotation, values outside a required range, ...).
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn hdr(offset: usize, msg: impl Into<String>) -> Self {
        Error::HdrParse {
            offset,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
