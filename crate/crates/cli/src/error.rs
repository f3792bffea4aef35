use std::path::Path;

use thiserror::Error;
use vac_core::Error as CoreError;

/// Failure classes, one per exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad argument or configuration value; exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Unreadable or malformed input data; exit code 2.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn field(name: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("invalid {name}: {reason}"))
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// Reports a core validation failure under the CLI field `name`.
pub fn as_field(name: &str) -> impl Fn(CoreError) -> CliError + '_ {
    move |e| match e {
        CoreError::InvalidParameter { reason, .. } => CliError::field(name, reason),
        other => other.into(),
    }
}

/// Maps a JSON error from `path`: syntax problems are data errors with a
/// line number, schema problems (unknown or mistyped fields) are validation
/// errors.
pub fn json_error(path: &Path, e: serde_json::Error) -> CliError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => CliError::Validation(format!("{}: {e}", path.display())),
        Category::Syntax | Category::Eof => {
            CliError::Data(format!("{}:{}: {e}", path.display(), e.line()))
        }
        Category::Io => CliError::io(path, e),
    }
}

pub type CliResult<T> = Result<T, CliError>;
