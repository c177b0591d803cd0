use std::path::PathBuf;

use thiserror::Error;

use crate::netmodel::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", summarize(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("unsupported instance file version {found} (expected {expected})")]
    Version { found: i64, expected: i64 },

    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("system is infeasible (h0 spectral radius {spectral_radius:.6})")]
    Infeasible { spectral_radius: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}
