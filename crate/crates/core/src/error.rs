use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the flow.
///
/// Variants are grouped by [`ErrorKind`] so that the command line front end
/// can map them to stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid genotype: gene {gene}: {reason}")]
    Genotype { gene: usize, reason: String },

    #[error("netlist with {gates} gates does not fit a {columns}-column grid (requires at least {gates} columns)")]
    Capacity { gates: usize, columns: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{inputs} inputs exceed the exhaustive limit of {limit}; use the BDD evaluator instead")]
    ExhaustiveLimit { inputs: usize, limit: usize },

    #[error("decision diagram node budget exceeded ({nodes} nodes)")]
    NodeBudget { nodes: usize },

    #[error("library lookup failed: {0}")]
    Lookup(String),

    #[error("checksum mismatch for {}", .0.display())]
    Checksum(PathBuf),

    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Resource,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Validation(_)
            | Error::Genotype { .. }
            | Error::Config(_)
            | Error::Lookup(_)
            | Error::ExhaustiveLimit { .. } => ErrorKind::Validation,
            Error::Capacity { .. } | Error::NodeBudget { .. } => ErrorKind::Resource,
            Error::Io { .. } | Error::Json { .. } | Error::Csv(_) | Error::Checksum(_) => ErrorKind::Io,
            Error::Stage { source, .. } => source.kind(),
        }
    }

    /// Exit code: 1 validation, 2 resource, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Validation => 1,
            ErrorKind::Resource => 2,
            ErrorKind::Io => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
