use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {malformed} of {total} lines malformed, refusing to load (wrong file?)")]
    MostlyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },

    #[error("invalid sample plan: {0}")]
    Plan(String),

    #[error("requested {split} size {size} exceeds pool of {pool}")]
    SizeExceedsPool {
        split: &'static str,
        size: usize,
        pool: usize,
    },

    #[error("lex error at bytes {start}..{end}: {msg}")]
    Lex {
        msg: String,
        start: usize,
        end: usize,
    },

    #[error("id range exhausted for component {component}")]
    RangeExhausted { component: String },

    #[error("cannot decode id {0}: outside every component range")]
    Decode(u32),

    #[error("id {0} is not assigned in this vocabulary or scope")]
    Unassigned(u32),

    #[error("no id for {component} token {text:?}")]
    UnknownToken { component: String, text: String },

    #[error("vocabulary file: {0}")]
    VocabFormat(String),

    #[error("encoded-image file: {0}")]
    ImageFormat(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("internal graph error: {0}")]
    Graph(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("training aborted: {0}")]
    TrainingAborted(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
