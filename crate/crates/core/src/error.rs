use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Format,
    Degenerate,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error in `{field}`: {reason}")]
    Format { field: &'static str, reason: String },

    #[error("validation error in `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("bad magic: expected \"{}\", found \"{}\"", .expected.escape_ascii(), .found.escape_ascii())]
    Magic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("truncated input: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("config hash mismatch: record {found}, manifest {expected}")]
    HashMismatch { expected: HexHash, found: HexHash },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("generation aborted: {0}")]
    GenerationAborted(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Format { .. }
            | Error::Magic { .. }
            | Error::Version { .. }
            | Error::Truncated { .. }
            | Error::HashMismatch { .. }
            | Error::Validation { .. }
            | Error::Json(_) => ErrorKind::Format,
            Error::Dimension(_) | Error::Input(_) => ErrorKind::Input,
            Error::Degenerate(_) | Error::GenerationAborted(_) => ErrorKind::Degenerate,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn format(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// 16-byte config digest, displayed as lowercase hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HexHash(pub [u8; 16]);

impl fmt::Display for HexHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}
