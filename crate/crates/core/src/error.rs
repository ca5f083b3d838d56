use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the benchmarking pipeline.
///
/// Variants split into configuration problems (bad flags, bad config files,
/// unresolvable codes) and data problems (malformed inputs, degenerate
/// matrices). The CLI maps the former to exit code 2 and the latter to 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("undefined input: {0}")]
    Undefined(String),

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("patients missing from demographics: {}", .0.join(", "))]
    MissingPatients(Vec<String>),

    #[error("model fit failed: {0}")]
    Fit(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by configuration rather than data.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
