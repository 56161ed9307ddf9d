use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hermite order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("multi-index {0} is not part of the truncation")]
    NotInTruncation(String),

    #[error("time {t} outside [0, {horizon}]")]
    TimeRange { t: f64, horizon: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field structure mismatch: {0}")]
    Structure(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at step {step} (t = {time}) in component {component}")]
    Divergence {
        step: usize,
        time: f64,
        component: String,
    },

    #[error("oracle domain exhausted: realized max |shift| = {max_shift} exceeds margin {margin}")]
    DomainExhausted { max_shift: f64, margin: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
