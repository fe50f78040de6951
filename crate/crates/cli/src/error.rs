use std::path::Path;

/// Exit code for input or validation failures.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for everything else (e.g. output not writable).
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Core(#[from] georep_core::Error),
    #[error("ParseError: {path}: {message}")]
    Parse { path: String, message: String },
    #[error("ReadError: {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("WriteError: {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("UsageError: {0}")]
    Usage(String),
}

impl Error {
    pub fn parse(path: &Path, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }

    pub fn read(path: &Path, source: std::io::Error) -> Self {
        Error::Read {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn write(path: &Path, source: std::io::Error) -> Self {
        Error::Write {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Write { .. } => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
