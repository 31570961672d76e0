use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate state: norm is zero or not finite")]
    DegenerateState,

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("prescribed ground state is not positive at grid index {index} (x = {x}): value {value}")]
    NonPositiveGroundState { index: usize, x: f64, value: f64 },

    #[error("domain size {size} exceeds the dense eigensolver cap of {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("eigensolver did not converge: residual {residual:e} exceeds {tolerance:e}")]
    EigenConvergence { residual: f64, tolerance: f64 },

    #[error("non-finite amplitude after step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input (bad config or parameters) rather
    /// than by a failure during the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Config { .. }
                | Error::Json(_)
                | Error::NonPositiveGroundState { .. }
                | Error::DomainMismatch(_)
        )
    }
}
