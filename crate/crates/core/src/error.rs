use thiserror::Error;

use crate::planar::IdentificationReport;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the pipeline, from ingestion to estimation.
#[derive(Error, Debug)]
pub enum Error {
    /// Malformed input that could not be parsed (ragged rows, bad numbers).
    #[error("parse error: {0}")]
    Parse(String),

    /// Structurally invalid input (duplicate labels, shape mismatches).
    #[error("schema error: {0}")]
    Schema(String),

    /// Missing observations under the reject policy.
    #[error("missing data: {0}")]
    MissingData(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimator failed (too few observations, collinearity, no convergence).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A matrix or correlation was singular where invertibility is required.
    #[error("singularity: {0}")]
    Singularity(String),

    /// Invalid graph input (self-loops, duplicate edges).
    #[error("graph error: {0}")]
    Graph(String),

    /// The restriction pattern does not identify the structural model.
    #[error(
        "identification error: {kind} with N = {n} provides {restrictions} restrictions, \
         needs {required}",
        kind = report.kind,
        n = report.n,
        restrictions = report.restrictions,
        required = report.required
    )]
    Identification { report: IdentificationReport },

    /// A node label or key was not found.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Invalid pipeline configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a pipeline stage name so aborts report where they happened.
    pub fn in_stage(self, stage: &str) -> Error {
        match self {
            Error::Io(e) => Error::Estimation(format!("stage {stage}: io error: {e}")),
            other => match other {
                Error::Parse(m) => Error::Parse(format!("stage {stage}: {m}")),
                Error::Schema(m) => Error::Schema(format!("stage {stage}: {m}")),
                Error::MissingData(m) => Error::MissingData(format!("stage {stage}: {m}")),
                Error::Domain(m) => Error::Domain(format!("stage {stage}: {m}")),
                Error::Estimation(m) => Error::Estimation(format!("stage {stage}: {m}")),
                Error::Singularity(m) => Error::Singularity(format!("stage {stage}: {m}")),
                Error::Graph(m) => Error::Graph(format!("stage {stage}: {m}")),
                Error::Lookup(m) => Error::Lookup(format!("stage {stage}: {m}")),
                Error::Config(m) => Error::Config(format!("stage {stage}: {m}")),
                e => e,
            },
        }
    }
}
