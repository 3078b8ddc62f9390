use std::path::Path;

use cof_core::jsonl::JsonlError;

/// Exit code 2 for usage problems, 1 for everything else.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// `locator` names the offending file and, where known, the line or record.
    #[error("{locator}: {message}")]
    Data { locator: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn data(locator: impl Into<String>, message: impl ToString) -> Self {
        CliError::Data {
            locator: locator.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl From<JsonlError> for CliError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io { path, source } => CliError::io(&path, source),
            JsonlError::Record { path, line, source } => CliError::data(format!("{}:{line}", path.display()), source),
        }
    }
}
