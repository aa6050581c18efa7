use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {reason}")]
    MalformedRecord { row: usize, reason: String },

    #[error("unknown segment ({origin}, {destination})")]
    UnknownSegment { origin: String, destination: String },

    #[error("unknown airport `{0}`")]
    UnknownAirport(String),

    #[error("unknown carrier `{0}`")]
    UnknownCarrier(String),

    #[error("airport `{0}` has no outgoing segments")]
    IsolatedAirport(String),

    #[error("alliance index {index} outside 1..={count}")]
    AllianceOutOfRange { index: usize, count: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("{what} size {actual} exceeds cap {cap}")]
    SizeCap {
        what: &'static str,
        actual: usize,
        cap: usize,
    },

    #[error("seed {0} is reserved for optimization and cannot be used for evaluation")]
    SeedCollision(u64),

    #[error("generator gave up after {attempts} redraws; uncovered airports: {uncovered:?}")]
    RetryCapExceeded {
        attempts: usize,
        uncovered: Vec<String>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    SizeCap,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::SeedCollision(_)
            | Error::UnknownFormat(_) => ErrorKind::Config,
            Error::SizeCap { .. } => ErrorKind::SizeCap,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }
}
