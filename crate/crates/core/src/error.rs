//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors surfaced by graph loading, numeric ops, and experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// A line in a dataset file could not be parsed.
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    /// Matrix or vector shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A node id referenced outside `0..n_nodes`.
    #[error("node id {id} out of range (graph has {n_nodes} nodes): {context}")]
    Index {
        id: usize,
        n_nodes: usize,
        context: String,
    },

    /// An argument outside its documented domain.
    #[error("{0}")]
    Domain(String),

    /// A class does not have enough labeled nodes for the requested split.
    #[error("class {class} has {available} usable nodes, {needed} required")]
    Capacity {
        class: usize,
        available: usize,
        needed: usize,
    },

    /// A config key failed to parse or validate.
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    /// A non-finite value appeared where finite numbers are required.
    #[error("non-finite value in {tensor}")]
    Numeric { tensor: String },

    /// Command-line usage error.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code for the CLI: 2 for config/usage problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Usage(_) => 2,
            _ => 1,
        }
    }
}
