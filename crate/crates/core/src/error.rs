use thiserror::Error;

/// Errors produced by fitting, scoring, evaluation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("instance {id:?} has no positive label")]
    NoPositive { id: Option<String> },

    #[error("invalid score vector: {0}")]
    InvalidScores(String),

    #[error("invalid label vector: {0}")]
    InvalidLabels(String),

    #[error("dimension mismatch: expected k = {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("ragged dataset: expected k = {expected}, instance {id:?} has {found}")]
    RaggedK {
        expected: usize,
        found: usize,
        id: String,
    },

    #[error("normal matrix is singular; ridge design is degenerate")]
    DegenerateDesign,

    #[error("qualification left class {class} empty")]
    EmptyClass { class: i8 },

    #[error("covariance of class {class} is singular even after regularization")]
    SingularCovariance { class: i8 },

    #[error("too few samples: need at least {needed}, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("curve has fewer than two points")]
    TooFewPoints,

    #[error("oracle AUC equals random AUC; nAUC is undefined")]
    DegenerateOracle,

    #[error("invalid abstention rate {0}; must lie in [0, 1)")]
    InvalidAlpha(f64),

    #[error("target performance {target} is unreachable on the reference set")]
    Unreachable { target: f64 },

    #[error("reference set of size {size} is too small: {reason}")]
    ReferenceTooSmall { size: usize, reason: String },

    #[error("zero variance in correlation input")]
    ZeroVariance,

    #[error("dataset of {n} instances is too small to split at ratio {ratio}")]
    TooSmallToSplit { n: usize, ratio: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("file is empty")]
    EmptyFile,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NoPositive { .. } => "NoPositive",
            Error::InvalidScores(_) => "InvalidScores",
            Error::InvalidLabels(_) => "InvalidLabels",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyDataset => "EmptyDataset",
            Error::RaggedK { .. } => "RaggedK",
            Error::DegenerateDesign => "DegenerateDesign",
            Error::EmptyClass { .. } => "EmptyClass",
            Error::SingularCovariance { .. } => "SingularCovariance",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::TooFewPoints => "TooFewPoints",
            Error::DegenerateOracle => "DegenerateOracle",
            Error::InvalidAlpha(_) => "InvalidAlpha",
            Error::Unreachable { .. } => "Unreachable",
            Error::ReferenceTooSmall { .. } => "ReferenceTooSmall",
            Error::ZeroVariance => "ZeroVariance",
            Error::TooSmallToSplit { .. } => "TooSmallToSplit",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse { .. } => "ParseError",
            Error::Schema(_) => "SchemaError",
            Error::EmptyFile => "EmptyFile",
            Error::Io(_) => "IoError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
