use alloc::string::String;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A record failed validation; `record` names it (scene id, index, key).
    #[error("ValidationError: {record}: {reason}")]
    Validation { record: String, reason: String },
    #[error("UnknownScene: {0}")]
    UnknownScene(String),
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("ZeroVariance: {0}")]
    ZeroVariance(String),
    #[error("ZeroDeviation: {0}")]
    ZeroDeviation(String),
    #[error("InsufficientData: {0}")]
    InsufficientData(String),
    #[error("LengthMismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("DegenerateError: {0}")]
    Degenerate(String),
    /// `pointer` is a JSON pointer to the offending configuration key.
    #[error("ConfigError: {pointer}: {reason}")]
    Config { pointer: String, reason: String },
}

impl Error {
    pub(crate) fn validation(record: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            record: record.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(pointer: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            reason: reason.into(),
        }
    }

    /// Short error name used by the command line ("ZeroVariance", ...).
    pub fn name(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "ValidationError",
            Error::UnknownScene(_) => "UnknownScene",
            Error::Domain(_) => "DomainError",
            Error::ZeroVariance(_) => "ZeroVariance",
            Error::ZeroDeviation(_) => "ZeroDeviation",
            Error::InsufficientData(_) => "InsufficientData",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::Degenerate(_) => "DegenerateError",
            Error::Config { .. } => "ConfigError",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
