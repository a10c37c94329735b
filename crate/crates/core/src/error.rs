use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid stable parameter: {0}")]
    InvalidStableParam(String),

    #[error("empty sample set")]
    EmptySample,

    #[error("hill estimator: {0}")]
    Hill(String),

    #[error("dataset: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGrad { layer: usize },

    #[error("non-finite loss")]
    NonFiniteLoss,

    #[error("non-finite sampler state at step {step}")]
    NonFiniteSample { step: usize },

    #[error("schedule: {0}")]
    Schedule(String),

    #[error("metric: {0}")]
    Metric(String),

    #[error("bound parameter out of domain: {0}")]
    BoundDomain(String),

    #[error("bench: {0}")]
    Bench(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
