use std::path::PathBuf;

use thiserror::Error;

/// Every failure the pipeline can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not positive definite: eigenvalue {value:e} at index {index}")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("eigenvalue {value:e} is still non-positive after shifting by {shift:e}")]
    StillNonPositive { value: f64, shift: f64 },

    #[error("length {0} is not a triangular number")]
    BadLength(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: sequence has J={actual} joints, model expects J={expected}")]
    JointCount { expected: usize, actual: usize },

    #[error("parse error in {path}: line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("inconsistent joint count: {path} has J={actual}, expected J={expected}")]
    InconsistentJoints {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("sequence has {0} frames, need at least 2")]
    TooShort(usize),

    #[error("root joint index {index} out of range for J={joints}")]
    BadRootIndex { index: usize, joints: usize },

    #[error("root subtraction of a single-joint sequence leaves no joints")]
    DegenerateOutput,

    #[error("unknown subject id {0}")]
    UnknownSubject(u32),

    #[error("unknown view id {0}")]
    UnknownView(u32),

    #[error("unknown instance id {0:?}")]
    UnknownInstance(String),

    #[error("{0} split is empty")]
    EmptySplit(&'static str),

    #[error("label {label} out of range for {num_classes} classes")]
    BadLabel { label: usize, num_classes: usize },

    #[error("only one class present in the training labels")]
    SingleClass,

    #[error("line search failed at iteration {iteration}")]
    LineSearchFailure { iteration: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}; the learning rate is probably too high")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("prediction and label lengths differ: {predictions} vs {labels}")]
    LengthMismatch { predictions: usize, labels: usize },

    #[error("empty input")]
    Empty,

    #[error("unsupported bundle format version {found} (this build reads version {supported})")]
    VersionMismatch { found: String, supported: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable name of the variant, used in structured diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "NonFinite",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NonPositiveEigenvalue { .. } => "NonPositiveEigenvalue",
            Error::StillNonPositive { .. } => "StillNonPositive",
            Error::BadLength(_) => "BadLength",
            Error::DimensionMismatch { .. } | Error::JointCount { .. } => "DimensionMismatch",
            Error::Parse { .. } => "ParseError",
            Error::InconsistentJoints { .. } => "InconsistentJoints",
            Error::EmptyDataset => "EmptyDataset",
            Error::TooShort(_) => "TooShort",
            Error::BadRootIndex { .. } => "BadRootIndex",
            Error::DegenerateOutput => "DegenerateOutput",
            Error::UnknownSubject(_) => "UnknownSubject",
            Error::UnknownView(_) => "UnknownView",
            Error::UnknownInstance(_) => "UnknownInstance",
            Error::EmptySplit(_) => "EmptySplit",
            Error::BadLabel { .. } => "BadLabel",
            Error::SingleClass => "SingleClass",
            Error::LineSearchFailure { .. } => "LineSearchFailure",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::Empty => "Empty",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::Config(_) => "Config",
            Error::Io { .. } => "IoError",
            Error::Json { .. } => "JsonError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
