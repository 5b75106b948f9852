use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("{module}: {message}")]
    Domain {
        module: &'static str,
        message: String,
    },

    #[error("source_model: pair distribution tail mass {tail:e} exceeds 1e-12 at n_max = {n_max}; use n_max >= {required}")]
    Truncation {
        n_max: usize,
        tail: f64,
        required: usize,
    },

    #[error("source_model: calibration failed: {0}")]
    Calibration(String),

    #[error("{module}: format error: {message}")]
    Format {
        module: &'static str,
        message: String,
    },

    #[error("config: parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config: validation failed:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("sim_engine: expected {expected:.3e} tags exceeds the memory cap of {cap:.3e}; use conditioned mode or a shorter duration")]
    Capacity { expected: f64, cap: f64 },

    #[error("rate_model: {0}")]
    Mismatch(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn format(module: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            module,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end, one per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 2,
            Error::Validation(_) => 3,
            Error::Domain { .. } => 4,
            Error::Truncation { .. } => 4,
            Error::Format { .. } => 5,
            Error::Io { .. } => 6,
            Error::Capacity { .. } => 7,
            Error::Calibration(_) => 8,
            Error::Mismatch(_) => 9,
        }
    }
}
