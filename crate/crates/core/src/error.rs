use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: {what} has length {got}, expected {expected}")]
    InputShape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric divergence at step {step}: neuron {neuron} has a non-finite state")]
    Divergence { step: u64, neuron: usize },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("unsupported network size {n}: supported range is 96..=7680 cells (7,680 is the single-node cap)")]
    UnsupportedSize { n: usize },

    #[error("calibration coverage: {0}")]
    Coverage(String),

    #[error("{path}: parse error at row {row}, column {col}: {msg}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 3,
            Error::Coverage(_) => 4,
            _ => 2,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, row: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            row,
            col,
            msg: msg.into(),
        }
    }
}
