use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    Utf8 { path: PathBuf, offset: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("embedding for `{word}` has {found} components, expected {expected}")]
    DimensionMismatch {
        word: String,
        expected: usize,
        found: usize,
    },

    #[error("{path}: truncated file, expected {expected} more bytes but only {available} available")]
    Truncated {
        path: PathBuf,
        expected: usize,
        available: usize,
    },

    #[error("duplicate entry for `{0}`")]
    Duplicate(String),

    #[error("vector dimension mismatch: {0} vs {1}")]
    VectorMismatch(usize, usize),

    #[error("cannot compare sparse and dense vectors")]
    MixedVectors,

    #[error("corpus contains no sentences")]
    EmptyCorpus,

    #[error("prompt has no sentences")]
    EmptyPrompt,

    #[error("unknown prompt id `{0}`")]
    UnknownPrompt(String),

    #[error("score matrix has no rows")]
    EmptyMatrix,

    #[error("score matrices differ in structure")]
    StructureMismatch,

    #[error("corpus contains no trainable triple")]
    NoTrainableTriple,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate sentence: weighted vector has zero norm")]
    Degenerate,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
