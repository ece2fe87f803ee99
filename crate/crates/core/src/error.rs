use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unsupported norm exponent p = {0} (supported: 1, 2)")]
    UnsupportedNorm(f64),

    #[error("point x = {x} lies outside the non-periodic domain [{left}, {right}]")]
    OutsideDomain { x: f64, left: f64, right: f64 },

    #[error("CFL condition violated: dt * max|f'| / dx = {ratio:.6} > 1")]
    Cfl { ratio: f64 },

    #[error("kernel not positive semidefinite on this grid: {0}")]
    NotPositiveSemidefinite(String),

    #[error("weights not realizable by member multiplicity: {0}")]
    NonRealizableWeights(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid cost matrix: {0}")]
    InvalidCostMatrix(String),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: String, reason: String },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed CSV: {0}")]
    Format(String),

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

impl Error {
    pub(crate) fn arg(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
