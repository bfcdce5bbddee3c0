use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid color: {0}")]
    InvalidColor(String),

    #[error("{path}: row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: row {row}: unknown condition label {label:?}")]
    UnknownCondition {
        path: PathBuf,
        row: usize,
        label: String,
    },

    #[error("rejection sampling for {condition} contexts did not converge after {attempts} attempts (close_max={close_max}, far_min={far_min})")]
    SamplingBudget {
        condition: String,
        attempts: usize,
        close_max: f64,
        far_min: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("word {word:?} is not in the vocabulary")]
    UnknownWord { word: String },

    #[error("unknown word {word:?}; available: {available}")]
    UnknownExportWord { word: String, available: String },

    #[error("{0}")]
    Metric(String),

    #[error("regression did not converge after {iterations} iterations (last beta={last_beta}, last change={last_change:e})")]
    RegressionNonConvergence {
        iterations: usize,
        last_beta: f64,
        last_change: f64,
    },

    #[error("regression predictor is constant or collinear with the intercept")]
    DegeneratePredictor,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("resume refused: {0}")]
    Resume(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
