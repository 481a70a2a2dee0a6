use std::path::PathBuf;

use analogy_core::CoreError;
use thiserror::Error;

pub type Result<T, E = KgeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KgeError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: duplicate triple (first seen on line {first_line})")]
    DuplicateTriple { path: PathBuf, line: usize, first_line: usize },
    #[error("{path}:{line}: unknown {kind} '{name}'")]
    UnknownSymbol { path: PathBuf, line: usize, kind: &'static str, name: String },
    #[error("model format: {0}")]
    Format(String),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("precondition failed: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },
    #[error("decomposition failed after {attempts} attempts: max residual {residual:.3e}")]
    Decomposition { attempts: usize, residual: f64 },
    #[error("training diverged in epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl KgeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KgeError::Io { path: path.into(), source }
    }
}
