use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("conflicting label entry for `{name}`: class {first} vs {second}")]
    ConflictingEntry {
        name: String,
        first: usize,
        second: usize,
    },

    #[error("unknown {kind} node `{name}`")]
    UnknownNode { kind: &'static str, name: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("pruning removed every domain")]
    EmptyGraph,

    #[error("dense solve refused: {n} nodes exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("no ground-truth labels overlap the verdicts")]
    EmptyTruth,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleSpec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("window starting at {start}: {source}")]
    Window {
        start: i64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedLine {
            line,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
