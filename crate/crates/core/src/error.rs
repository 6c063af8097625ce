use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type. CLI exit codes map `InvalidConfig` to a usage
/// error and everything else to a data/model error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("sequence must contain at least one timestep")]
    EmptySequence,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("prefix length {prefix} out of range 1..={len}")]
    PrefixOutOfRange { prefix: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation set is empty")]
    EmptyEvalSet,

    #[error("non-finite loss encountered")]
    NonFiniteLoss,

    #[error("{path}, line {line}: {message}")]
    DatasetFormat {
        path: String,
        line: usize,
        message: String,
    },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
        }
    }
}
