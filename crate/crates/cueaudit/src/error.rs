//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("empty cell: no trials to aggregate")]
    EmptyCell,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("corpus error at line {line}: {msg}")]
    CorpusLine { line: usize, msg: String },

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown probe tag: {0}")]
    UnknownProbe(String),

    #[error("unscripted prompt digest: {0}")]
    UnscriptedPrompt(String),

    #[error("transport error after {attempts} attempts: {msg}")]
    Transport { attempts: u32, msg: String },

    #[error("API error (status {status}): {msg}")]
    Api { status: u16, msg: String },

    #[error("embedding provider mismatch: {0} vs {1}")]
    ProviderMismatch(String, String),

    #[error("embedding error: {0}")]
    Embedding(String),

    #[error("evidence lock violation: {0}")]
    LockViolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AuditError>;
