use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("zero-length audio")]
    ZeroLength,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid sample rate {0}")]
    InvalidRate(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reference signal is all zeros")]
    ZeroReference,
    #[error("coordinate {0} lies outside the grid span")]
    OutOfSpan(f64),
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(usize),
    #[error("loss became non-finite at epoch {epoch}, step {step} (wave {wave}, spec {spec})")]
    NonFiniteLoss { epoch: usize, step: usize, wave: f64, spec: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("stream session already closed")]
    SessionClosed,
    #[error("empty input")]
    EmptyInput,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
