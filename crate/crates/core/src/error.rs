use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported resampling ratio {p}/{q} (both terms must be <= {limit})")]
    UnsupportedRatio { p: u64, q: u64, limit: u64 },

    #[error("degenerate filterbank: mel band {band} has no positive weight")]
    DegenerateFilterbank { band: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    #[error("shape underflow at stage {stage}: {axis} dimension reached 0")]
    ShapeUnderflow { stage: String, axis: &'static str },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("no evaluable tags")]
    EmptySummary,

    #[error("degenerate variance: both samples are constant with different means")]
    DegenerateVariance,

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("unsupported dataset layout: {0}")]
    UnsupportedLayout(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
