use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("corrupted field: {0}")]
    CorruptedField(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("index {index} outside active range {range}")]
    Index { index: String, range: String },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("forcing trace covers [{start}, {end}] but [0, {requested}] was requested")]
    Coverage { start: f64, end: f64, requested: f64 },

    #[error("unstable weight: log-weight {exponent:.3} exceeds the overflow guard {guard}")]
    UnstableWeight { exponent: f64, guard: f64 },

    #[error("numerical instability: {0}")]
    Unstable(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("undefined radius: {0}")]
    UndefinedRadius(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("calibration refused: {0}")]
    CalibrationRefused(String),

    #[error("config key `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numerics (blow-up, overflow) rather
    /// than by bad input or the environment.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnstableWeight { .. } | Error::Unstable(_) | Error::Overflow(_)
        )
    }

    /// True for failures caused by invalid user-supplied parameters.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::RejectedInput(_)
                | Error::InvalidParameter { .. }
                | Error::Index { .. }
                | Error::Validation { .. }
                | Error::Usage(_)
                | Error::Coverage { .. }
                | Error::InsufficientSamples(_)
        )
    }

    /// Process exit status: 2 for invalid input, 3 for numerical failure
    /// (including an undefined radius and a refused calibration), 1 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else if self.is_numerical()
            || matches!(self, Error::UndefinedRadius(_) | Error::CalibrationRefused(_))
        {
            3
        } else {
            1
        }
    }
}
