use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error on `{field}`: {message}")]
    Validation { field: String, message: String },

    /// A reference points at a record that does not exist, or a linked
    /// record required by the operation is absent.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("forbidden: {0}")]
    Forbidden(String),

    #[error("adapter `{adapter}` failed: {message}")]
    Adapter { adapter: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Integrity error naming the missing `(kind, key)` pair, e.g. `missing offering off1`.
    pub fn missing(kind: impl std::fmt::Display, key: &str) -> Self {
        Error::Integrity(format!("missing {kind} {key}"))
    }

    /// Stable machine code used by the HTTP error body.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::Integrity(_) => "integrity",
            Error::NotFound(_) => "not_found",
            Error::Conflict(_) => "conflict",
            Error::Config(_) => "config",
            Error::Forbidden(_) => "forbidden",
            Error::Adapter { .. } => "adapter",
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => "internal",
        }
    }

    /// Process exit code: 1 validation, 2 integrity, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Config(_) | Error::Forbidden(_) => 1,
            Error::Integrity(_) | Error::NotFound(_) | Error::Conflict(_) => 2,
            Error::Adapter { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 3,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}
