use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("no rainfall events")]
    NoRainfall,

    #[error("divergent IDF exponent n = {0} (must satisfy 0 <= n < 1)")]
    DivergentIdf(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("network contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("zero variance in observed series")]
    ZeroVariance,

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("node '{node}' failed the consistency check (CR = {cr:.4} >= 0.1)")]
    Inconsistent { node: String, cr: f64 },

    #[error("missing indicator column for leaf '{0}'")]
    MissingIndicator(String),

    #[error("indicator '{0}' has a non-positive column sum and cannot be normalized")]
    ZeroColumn(String),

    #[error("{} validation error(s):\n  {}", .0.len(), .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
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

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_)
            | Error::Config(_)
            | Error::InvalidConfig(_)
            | Error::Parse(_)
            | Error::DivergentIdf(_)
            | Error::Cycle(_)
            | Error::Inconsistent { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Wraps an error with the name of the pipeline stage that produced it.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
