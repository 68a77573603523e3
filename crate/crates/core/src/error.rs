use std::io;
use std::path::Path;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("parallel files differ in length: source has {source_lines} lines, target has {target_lines} lines")]
    UnequalLength { source_lines: u64, target_lines: u64 },

    #[error("{path}:{line}: {message}")]
    Table {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unsupported language pair '{requested}' (supported: {supported})")]
    UnsupportedLanguagePair { requested: String, supported: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("sidecar protocol violation: {message} (payload: {payload})")]
    Protocol { message: String, payload: String },

    #[error("report line {line}: {message}")]
    Report { line: usize, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn io_path(path: &Path, source: io::Error) -> Self {
        Error::io(path.display().to_string(), source)
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnsupportedLanguagePair { .. } | Error::Table { .. } => 1,
            Error::Io { .. }
            | Error::UnequalLength { .. }
            | Error::Alignment(_)
            | Error::Protocol { .. }
            | Error::Report { .. } => 2,
            Error::Invariant(_) => 3,
        }
    }
}
