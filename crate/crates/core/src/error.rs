use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),

    #[error("invalid channel {0:?}: expected \"#<language>.wikipedia\"")]
    InvalidChannel(String),

    #[error("cannot parse recent-changes line ({reason}): {line:?}")]
    Parse { reason: &'static str, line: String },

    #[error("malformed replay record at line {line_no}: {reason}")]
    ReplayRecord { line_no: usize, reason: String },

    #[error("malformed label at line {line_no}: {reason}")]
    Label { line_no: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid layout spec: {0}")]
    InvalidSpec(String),

    #[error("metric {0} is undefined (zero denominator)")]
    UndefinedMetric(&'static str),

    #[error("render failed: {0}")]
    Render(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("connector {connector} failed: {reason}")]
    Connector { connector: String, reason: String },

    #[error("langlink lookup failed: {0}")]
    Resolver(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(reason: &'static str, line: &str) -> Self {
        Error::Parse {
            reason,
            line: line.to_owned(),
        }
    }
}
