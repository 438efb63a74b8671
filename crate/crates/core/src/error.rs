use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("objective returned a non-finite loss ({value})")]
    NonFiniteLoss { value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("direction is not a descent direction (slope {slope})")]
    NonDescentDirection { slope: f64 },

    #[error("line search failed to satisfy the strong Wolfe conditions")]
    LineSearchFailed,

    #[error("swarm of {particles} particles exceeds the budget of {budget}")]
    SwarmTooLarge { particles: usize, budget: usize },

    #[error("target spectrum vanishes at frequency {k}")]
    ZeroTargetFrequency { k: usize },

    #[error("{which} component of the labels has zero norm")]
    DegenerateDenominator { which: &'static str },

    #[error("bad IDX magic in {path}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("IDX file {path} is truncated")]
    TruncatedFile { path: PathBuf },

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("cannot draw {requested} samples from {available}")]
    CountTooLarge { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
