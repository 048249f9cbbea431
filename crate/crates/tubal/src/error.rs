use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular tensor: transform-domain slice {slice} has condition estimate {condition:e}")]
    SingularTensor { slice: usize, condition: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("bidiagonalization broke down after {completed} of {requested} steps")]
    Breakdown { completed: usize, requested: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{}: checksum mismatch (stored {stored:#010x}, computed {computed:#010x})", path.display())]
    Checksum {
        path: PathBuf,
        stored: u32,
        computed: u32,
    },

    #[error("{}: unsupported model format version {found} (expected {expected})", path.display())]
    Version {
        path: PathBuf,
        found: u16,
        expected: u16,
    },

    #[error("{}: {msg}", path.display())]
    Image { path: PathBuf, msg: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::SingularTensor { .. }
            | Error::DegenerateData(_)
            | Error::NoConvergence(_)
            | Error::Breakdown { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
