use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no data points supplied")]
    EmptyData,

    #[error("feature {index} ({name}) has zero variance over the source distribution")]
    ZeroVarianceFeature { index: usize, name: String },

    #[error("state space of 2^{n} states exceeds the enumeration limit of 2^{limit}")]
    StateSpaceTooLarge { n: usize, limit: usize },

    #[error("family `{family}` does not support feature set `{features}`")]
    UnsupportedPairing { family: String, features: String },

    #[error("density queries are not defined for point masses on a continuous space")]
    UnsupportedForPointMass,

    #[error("argmax domain is empty")]
    EmptyDomain,

    #[error("point equivalence requires the harmonic epsilon schedule")]
    ScheduleMismatch,

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("every conditional weight vanished (max log-weight {max_log_weight})")]
    AllWeightsVanish { max_log_weight: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric cell at row {row}, column `{col}`")]
    NonNumericCell { row: usize, col: String },

    #[error("column `{column}` range [{min}, {max}] falls outside the expected range [{lo}, {hi}]")]
    RangeSanityFail {
        column: String,
        min: f64,
        max: f64,
        lo: f64,
        hi: f64,
    },

    #[error("checksum mismatch for {path}: expected {expected}, got {actual}")]
    Checksum {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Unknown { .. }
            | Error::UnsupportedPairing { .. }
            | Error::ScheduleMismatch
            | Error::DimensionMismatch { .. } => 2,
            Error::EmptyData
            | Error::ZeroVarianceFeature { .. }
            | Error::MissingColumn(_)
            | Error::NonNumericCell { .. }
            | Error::RangeSanityFail { .. }
            | Error::Checksum { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 3,
            Error::StateSpaceTooLarge { .. }
            | Error::UnsupportedForPointMass
            | Error::EmptyDomain
            | Error::NoConvergence { .. }
            | Error::AllWeightsVanish { .. }
            | Error::InvalidMixture(_)
            | Error::Numerical(_) => 4,
        }
    }
}
