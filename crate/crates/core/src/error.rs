use thiserror::Error;

/// Errors reported by construction, query and archive routines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index out of range: {index} >= {len}")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("occurrence out of range: {occurrence} (available: {available})")]
    OccurrenceOutOfRange { occurrence: u64, available: u64 },

    #[error("symbol out of range: {symbol} >= {sigma}")]
    SymbolOutOfRange { symbol: u64, sigma: u64 },

    #[error("value {value} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: u32 },

    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: u32, right: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corrupt archive: {0}")]
    CorruptArchive(String),

    #[error("unsupported archive version {0}")]
    UnsupportedVersion(u32),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
