use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty network")]
    EmptyNetwork,

    #[error("negative age {0}")]
    NegativeAge(f64),

    #[error("condition below model support: {0}")]
    BelowSupport(f64),

    #[error("condition {pqi} exceeds maximum {max}")]
    AboveMaximum { pqi: f64, max: f64 },

    #[error("unit cost for {action} must be positive, got {cost}")]
    NonPositiveCost { action: &'static str, cost: f64 },

    #[error("duplicate segment id {0}")]
    DuplicateSegment(u64),

    #[error("oracle scale exceeded ({items} items, {units} capacity units)")]
    OracleScaleExceeded { items: usize, units: u64 },

    #[error("menu for segment {0} has no zero-cost do-nothing option")]
    MissingDoNothing(u64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("architecture mismatch between networks")]
    ArchitectureMismatch,

    #[error("weight file {path}: {reason}")]
    WeightFile { path: PathBuf, reason: String },

    #[error("trajectory holds {got} states, need at least {needed}")]
    TrajectoryTooShort { needed: usize, got: usize },

    #[error("year {year}: spend {spent} cents exceeds budget {budget} cents")]
    BudgetViolation { year: usize, spent: i64, budget: i64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Format {
            path: path.into(),
            source,
        }
    }
}
