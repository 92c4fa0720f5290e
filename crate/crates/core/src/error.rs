use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("label {label} out of range 1..={k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("class {class} has no observations")]
    EmptyClass { class: usize },

    #[error("class {class} has {have} observations, need at least {need}")]
    ClassTooSmall { class: usize, have: usize, need: usize },

    #[error("class {class} is absent from the calibration half")]
    EmptyCalibrationClass { class: usize },

    #[error("column {column} is constant and the fit is unpenalized")]
    DegenerateDesign { column: usize },

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("row {row} of the probability matrix sums to {sum}")]
    RowSum { row: usize, sum: f64 },

    #[error("need at least {need} samples, have {have}")]
    TooFewSamples { have: usize, need: usize },

    #[error("no survival observations")]
    EmptyData,

    #[error("stratum for class {class} is empty")]
    EmptyStratum { class: usize },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error at {path}: {source}")]
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
    /// Wraps an error with the pipeline stage it came from.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
