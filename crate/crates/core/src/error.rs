use std::io;
use std::path::PathBuf;

/// Errors from corpus ingestion, training, retrieval, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("corpus contains no documents")]
    EmptyCorpus,

    #[error("citation graph has no edges")]
    EmptyGraph,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unknown document id {0:?}")]
    UnknownId(String),

    #[error("vector for {id:?} has {found} components, expected {expected}")]
    DimMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("id sets differ: {0}")]
    IdSetMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("point with norm {norm} is outside the open unit ball")]
    OutsideBall { norm: f64 },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
