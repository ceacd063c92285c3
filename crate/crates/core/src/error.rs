use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("masked and unmasked traits do not differ")]
    DegenerateDifference,

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("optimization diverged at iteration {iteration}")]
    DivergedOptimization { iteration: usize },

    #[error("semantic space `{0}` has no fitted activation distribution")]
    NotFitted(String),

    #[error("radar is incomplete: missing {0}")]
    IncompleteRadar(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("missing prerequisite: run `{command}` first ({detail})")]
    MissingPrerequisite { command: String, detail: String },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
