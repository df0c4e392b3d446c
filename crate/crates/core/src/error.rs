use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("label 0 is the novel pseudo-class and cannot be a ground-truth label")]
    PseudoClassLabel,

    #[error("label {label} is outside the valid range 1..={max}")]
    LabelOutOfRange { label: u32, max: u32 },

    #[error("class {class} needs {needed} instances but only {available} are available (shortfall {shortfall})")]
    InsufficientInstances {
        class: u32,
        needed: usize,
        available: usize,
        shortfall: usize,
    },

    #[error("empty training data")]
    EmptyData,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid training spec: {0}")]
    TrainSpec(String),

    #[error("compmean needs at least 2 known classes, got {0}")]
    TooFewClasses(usize),

    #[error("regularized covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("budget {budget} out of range 0..={max}")]
    BudgetOutOfRange { budget: usize, max: usize },

    #[error("instance ids do not match: {0}")]
    IdMismatch(String),

    #[error("empty feedback set; nothing to fine-tune on")]
    EmptyFeedback,

    #[error("strategy {0} needs a base model with K+N logits")]
    MissingBaseModel(&'static str),

    #[error("need at least 2 points for AUC, got {0}")]
    TooFewPoints(usize),

    #[error("x values must be strictly ascending")]
    NonAscending,

    #[error("invalid score matrix: {0}")]
    ScoreMatrix(String),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code for the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Format { .. } | Error::ScoreMatrix(_) | Error::IdMismatch(_) | Error::Io { .. } | Error::Json(_) => 3,
            _ => 4,
        }
    }
}
