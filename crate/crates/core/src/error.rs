use std::io;

use thiserror::Error;

/// Errors raised by the shearlet library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infinite product did not converge: sup difference {diff:e} at depth {depth}")]
    Convergence { depth: u32, diff: f64 },
    #[error("generator rejected: support floor {0:e} is not positive")]
    GeneratorRejected(f64),
    #[error("window rejected: conic support floor {0:e} is not positive")]
    WindowRejected(f64),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("partition identity residual {0:e} exceeds 1e-9 (shear indexing bug)")]
    Indexing(f64),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("cartoon spec error: {0}")]
    Spec(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
