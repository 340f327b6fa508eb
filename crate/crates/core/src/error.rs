use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("invalid observation at index {index}: {reason}")]
    InvalidObservation { index: usize, reason: String },

    #[error("unbalanced design: rank {rank} has {found} observations, expected {expected}")]
    UnbalancedDesign {
        rank: usize,
        found: usize,
        expected: usize,
    },

    #[error("empty design: k={k}, m={m}")]
    EmptyDesign { k: usize, m: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("target correlation {target} is unreachable: ceiling is {ceiling}")]
    Calibration { target: f64, ceiling: f64 },

    #[error(
        "t={t} is outside the inference window (observed-time survival is {observed_survival})"
    )]
    OutsideWindow { t: f64, observed_survival: f64 },

    #[error("closed form unavailable: {0}")]
    NoClosedForm(&'static str),

    #[error("quadrature failed to converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("input {path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("csv {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySample => "empty_sample",
            Error::InvalidObservation { .. } => "invalid_observation",
            Error::UnbalancedDesign { .. } => "unbalanced_design",
            Error::EmptyDesign { .. } => "empty_design",
            Error::Parameter { .. } => "parameter",
            Error::Calibration { .. } => "calibration",
            Error::OutsideWindow { .. } => "outside_window",
            Error::NoClosedForm(_) => "no_closed_form",
            Error::Quadrature { .. } => "quadrature",
            Error::Config { .. } => "config",
            Error::Input { .. } => "input",
            Error::Csv { .. } => "csv",
            Error::Io { .. } => "io",
        }
    }
}
