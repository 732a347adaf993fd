use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: u32, column: u32, message: String },

    #[error("ARFF error at line {line}: {message}")]
    Arff { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset has no instances")]
    EmptyDataset,

    #[error("label `{0}` has no positive instances, IRlbl is undefined")]
    UndefinedIrlbl(String),

    #[error("no label has a positive instance")]
    NoPositiveLabels,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid value for `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("diffusion model has not been trained")]
    Untrained,

    #[error("dataset has no instance carrying a minority label")]
    NoMinorityInstances,

    #[error("{0} is not implemented")]
    Unsupported(&'static str),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter { name, message: message.into() }
    }
}
