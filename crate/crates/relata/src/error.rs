//! Error type shared by every module in the crate.

use std::io;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Non-finite values or a failed numeric invariant.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A caller passed an argument outside an operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Malformed content in an input file, with a 1-based line number.
    #[error("format error in {path} (line {line}): {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },

    /// File-level structural problems: bad magic, truncation, version skew.
    #[error("format error in {path}: {msg}")]
    File { path: String, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("out-of-vocabulary word: {0}")]
    Oov(String),

    #[error("training data error: {0}")]
    TrainingData(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn file(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for this error: 3 for internal numeric problems,
    /// 2 for anything caused by inputs or usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_) | Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}
