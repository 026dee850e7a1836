use thiserror::Error;

pub type Result<T> = std::result::Result<T, AneError>;

#[derive(Debug, Error)]
pub enum AneError {
    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("parameter vector has length {actual}, architecture {arch} needs {expected}")]
    ParamLength {
        arch: String,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite input coordinate at point {index}")]
    NonFiniteInput { index: usize },

    #[error("layer {layer} out of range 1..={max}")]
    LayerOutOfRange { layer: usize, max: usize },

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("quadrature resolution must be at least 1")]
    ZeroResolution,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("point ({x}, {y}) lies outside the partitioned domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("improvement rate undefined: {0}")]
    UndefinedRate(String),

    #[error("stopped by observer: {0}")]
    Stopped(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
