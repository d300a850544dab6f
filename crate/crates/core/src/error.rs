use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the lab. Messages carry the module that produced them.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("corpus: {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("corpus: invalid sentence: {0}")]
    InvalidSentence(String),
    #[error("corpus: invalid grammar config: {0}")]
    Grammar(String),
    #[error("gates: {0}")]
    Gate(String),
    #[error("encoder: {0}")]
    Encoder(String),
    #[error("heads: {0}")]
    Head(String),
    #[error("trainer: {0}")]
    Train(String),
    #[error("probes: {0}")]
    Probe(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("tensor: {0}")]
    Tensor(#[from] headlab_tensor::TensorError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
