//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed line in a data file, reported with its 1-based line number.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("entity not found: {0}")]
    EntityNotFound(String),

    #[error("duplicate metadata entry for entity {0}")]
    DuplicateMeta(String),

    /// The planner produced no seed entity resolvable in the target graph.
    #[error("no seed entity could be resolved: {0}")]
    EmptyPlan(String),

    /// Backend output that does not form a valid plan document.
    #[error("plan format error: {0}")]
    PlanFormat(String),

    /// Transport failure after all retries were exhausted.
    #[error("transport error after {attempts} attempt(s): {msg}")]
    Transport { msg: String, attempts: u32 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// The brute-force oracle refuses inputs beyond its desk-scale bounds.
    #[error("oracle bound exceeded: {0}")]
    OracleBound(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
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
