use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("infeasible dilution: target {target} mol/L is not below stock {stock} mol/L")]
    InfeasibleDilution { target: f64, stock: f64 },

    #[error("degenerate feature column {column}: zero variance")]
    DegenerateFeature { column: String },

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("undefined score: output {output} has zero variance")]
    UndefinedScore { output: usize },

    #[error("missing calibration factor for {model}.{nutrient}")]
    CalibrationMissing { model: String, nutrient: String },

    #[error("degenerate calibration for {nutrient}: uncalibrated prediction is zero for sample {sample}")]
    CalibrationDegenerate { nutrient: String, sample: String },

    #[error("model file: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
