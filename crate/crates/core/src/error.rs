use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// A caller broke an operation's precondition (stepping a finished
    /// episode, empty Q vector, negative similarity entry, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("trajectory corpus is empty")]
    EmptyCorpus,

    #[error("replay buffer holds {size} transitions, {requested} requested")]
    NotReady { size: usize, requested: usize },

    #[error("{path}: {source}{hint}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
        hint: &'static str,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors that stem from the experiment description rather than
    /// from running it. The CLI maps these to exit code 2.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Validation(_))
    }
}
