use std::path::PathBuf;

use crate::model::BuildIssue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The build failed structural validation.
    #[error("invalid build: {}", format_issues(.0))]
    InvalidBuild(Vec<BuildIssue>),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("machine bit layout mismatch: {0}")]
    Layout(String),

    #[error("machine count {count} for type `{machine_type}` outside [1, {max}]")]
    CountOutOfRange {
        machine_type: String,
        count: u32,
        max: u32,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or structurally invalid input
    /// (as opposed to misuse of the API).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidBuild(_) | Error::Parse { .. } | Error::Io { .. } | Error::Csv(_)
        )
    }
}

fn format_issues(issues: &[BuildIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
