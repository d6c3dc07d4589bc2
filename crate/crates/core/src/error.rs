use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("empty pathway `{0}`")]
    EmptyPathway(String),

    #[error("gene `{0}` belongs to no pathway")]
    OrphanGene(String),

    #[error("unknown gene identifier `{0}`")]
    UnknownGene(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-positive survival time {value} for sample `{sample}`")]
    NonPositiveSurvivalTime { sample: String, value: f64 },

    #[error("missing value for sample `{sample}`, column `{column}`")]
    MissingValue { sample: String, column: String },

    #[error("scale not positive definite")]
    NotPositiveDefinite,

    #[error("rank-zero input: {0}")]
    RankZero(String),

    #[error("CFTP failed to coalesce within {0} sweeps")]
    CftpNoCoalescence(usize),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid model state: {0}")]
    InvalidState(String),

    #[error("empty post-burn-in trace")]
    EmptyTrace,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
