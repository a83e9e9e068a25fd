use thiserror::Error;

#[derive(Debug, Error)]
pub enum FfsError {
    #[error("degenerate posterior: total precision is singular at time block {block}")]
    DegeneratePosterior { block: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dense oracle guard exceeded: T*d = {0} > 64")]
    GuardExceeded(usize),
    #[error("numerical failure at cycle {cycle}: {what}")]
    NumericalFailure { cycle: usize, what: String },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("format error in {path}: {msg}")]
    Format { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FfsError>;
