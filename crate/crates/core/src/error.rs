use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported or malformed image {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("requested {requested} {class} samples but only {available} are available")]
    InsufficientSamples {
        class: &'static str,
        requested: usize,
        available: usize,
    },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("covariance matrix is not positive definite")]
    SingularCovariance,
    #[error("no pixels to evaluate")]
    EmptyInput,
    #[error("ground truth contains a single class")]
    SingleClassTruth,
    #[error("no image/mask pairs found in {0}")]
    NoPairsFound(PathBuf),
    #[error("feature space mismatch: {0}")]
    SpaceTagMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed model or matrix file: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier of the error variant, used by the CLI's
    /// `error[<Kind>]:` prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::Format { .. } => "FormatError",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::DegenerateData(_) => "DegenerateData",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::SingleClassData => "SingleClassData",
            Error::SingularCovariance => "SingularCovariance",
            Error::EmptyInput => "EmptyInput",
            Error::SingleClassTruth => "SingleClassTruth",
            Error::NoPairsFound(_) => "NoPairsFound",
            Error::SpaceTagMismatch(_) => "SpaceTagMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Serialization(_) => "SerializationError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
