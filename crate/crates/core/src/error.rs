use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}:{line}: duplicate id `{id}`")]
    DuplicateId {
        source_name: String,
        line: usize,
        id: String,
    },

    #[error("embedding file format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector contains a non-finite component")]
    NonFinite,

    #[error("cannot normalize a zero-norm vector")]
    ZeroNorm,

    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("unknown topic `{0}`")]
    UnknownTopic(String),

    #[error("index is empty")]
    EmptyIndex,

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("a batch is already outstanding; judge it before requesting another")]
    OutstandingBatch,

    #[error("no batch is outstanding")]
    NoOutstandingBatch,

    #[error("session is finished")]
    Finished,

    #[error("stale or unknown batch token `{0}`")]
    StaleToken(String),

    #[error("judgments do not match the issued batch: {0}")]
    JudgmentMismatch(String),

    #[error("topic `{0}` has no relevant documents")]
    NoRelevant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
