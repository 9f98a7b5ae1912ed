use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("design with {columns} columns is rank deficient (singular value ratio {ratio:.3e} <= tolerance {tol:.1e})")]
    RankDeficient {
        columns: usize,
        ratio: f64,
        tol: f64,
    },

    #[error("support set is empty")]
    EmptySupport,

    #[error("index {index} out of range for {len} columns")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid bound: {0}")]
    InvalidBound(String),

    #[error("assumption violated: {message} (indices {indices:?})")]
    AssumptionViolation {
        message: String,
        indices: Vec<usize>,
    },

    #[error("covariance block C_AA is singular (smallest eigenvalue {min_eig:.3e})")]
    SingularBlock { min_eig: f64 },

    #[error("refusing brute-force enumeration of {count} supports (limit {limit})")]
    CombinatorialBlowup { count: u128, limit: u128 },

    #[error(
        "coordinate descent did not converge after {sweeps} sweeps (gap {gap:.3e}, kkt {kkt:.3e})"
    )]
    NoConvergence { sweeps: usize, gap: f64, kkt: f64 },

    #[error("residualized treatment is degenerate (||D~||^2 = {norm_sq:.3e})")]
    DegenerateTreatment { norm_sq: f64 },

    #[error("only {succeeded} of {total} per-OCP runs succeeded ({required} required)")]
    AggregateFailure {
        succeeded: usize,
        total: usize,
        required: usize,
    },

    #[error("{failed} of {total} subsample runs failed (more than 20%)")]
    SubsampleFailure { failed: usize, total: usize },

    #[error("{failed} of {total} replications failed for method {method} (more than 10%)")]
    ReplicationFailure {
        method: String,
        failed: usize,
        total: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing column(s): {}", .0.join(", "))]
    MissingColumn(Vec<String>),

    #[error("parse error at row {row}, column '{column}': cannot parse '{value}'")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("no complete rows left after filtering ({dropped} dropped)")]
    EmptyAfterFiltering { dropped: usize },

    #[error("config error at '{key}': {message}")]
    Config { key: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
