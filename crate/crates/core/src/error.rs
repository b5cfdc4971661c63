use std::path::PathBuf;

/// Errors raised by the clustering library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch on {axis}: expected {expected}, got {got}")]
    DimensionMismatch {
        axis: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },

    #[error("label {label} at sample {sample} is out of range for k = {k}")]
    LabelOutOfRange { sample: usize, label: usize, k: usize },

    #[error("need at least {needed} distinct rows for seeding, found {found}")]
    TooFewDistinctRows { needed: usize, found: usize },

    #[error("step size {gamma} violates the bound {bound} derived from sigma_max = {sigma_max}")]
    StepSize {
        gamma: f64,
        bound: f64,
        sigma_max: f64,
    },

    #[error("sample {sample} has zero total count")]
    ZeroRowSum { sample: String },

    #[error("negative count {value} at row {row}, column {col}")]
    NegativeCount { row: usize, col: usize, value: f64 },

    #[error("filtering removed every feature")]
    AllFeaturesRemoved,

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
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
