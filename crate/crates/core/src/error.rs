use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("eigenvalue iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("invalid size {n}: {reason}")]
    InvalidSize { n: usize, reason: &'static str },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("no connected Erdos-Renyi graph with n={n}, edge_prob={edge_prob} after {attempts} attempts")]
    Generation { n: usize, edge_prob: f64, attempts: usize },

    #[error("({receiver}, {sender}) is not an edge")]
    InvalidLink { receiver: usize, sender: usize },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("training diverged at iteration {iteration}: node {node} parameter magnitude {magnitude:e}")]
    Diverged { iteration: usize, node: usize, magnitude: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dimension(expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension { expected: expected.to_string(), found: found.to_string() }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config { field: field.to_string(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by user input (bad config, graph file, arguments)
    /// rather than by a numeric or I/O failure during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::InvalidSize { .. }
                | Error::Domain(_)
                | Error::Generation { .. }
        )
    }
}
