use std::path::{Path, PathBuf};

use serde_json::json;

/// Failure of a CLI command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] rodeodb_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        Self::Format { path: path.to_path_buf(), message: message.into() }
    }

    /// 1 solver failure, 2 usage or validation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        use rodeodb_core::Error as E;
        match self {
            Self::Usage(_) | Self::Format { .. } => 2,
            Self::Io { .. } => 3,
            Self::Core(E::Io(_)) => 3,
            Self::Core(E::Diverged { .. }) => 1,
            Self::Core(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        use rodeodb_core::Error as E;
        match self {
            Self::Usage(_) => "usage",
            Self::Io { .. } | Self::Core(E::Io(_)) => "io",
            Self::Format { .. } => "format",
            Self::Core(E::DimensionMismatch(_)) => "dimension_mismatch",
            Self::Core(E::Diverged { .. }) => "diverged",
            Self::Core(E::DegenerateAnchors { .. }) => "degenerate_anchors",
            Self::Core(E::MalformedRecord { .. }) => "malformed_record",
            Self::Core(E::EmptyInput(_)) => "empty_input",
            Self::Core(_) => "invalid_input",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
