use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate entry ({row}, {col}) at line {line}")]
    DuplicateEntry { row: usize, col: usize, line: usize },

    #[error("explicit zero entry at line {line}")]
    ZeroEntry { line: usize },

    #[error("invalid matrix structure: {0}")]
    InvalidMatrix(String),

    #[error("{c} nodes do not divide {d} coordinates")]
    NonDivisible { d: usize, c: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("column {col} is zero; its curvature M_ii would vanish")]
    ZeroColumn { col: usize },

    #[error("non-finite value in {what} (coordinate {index})")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "power iteration did not converge after {iterations} iterations (last estimate {estimate})"
    )]
    NonConvergence { iterations: usize, estimate: f64 },

    #[error("dense oracle limited to d <= {limit}, got d = {d}")]
    SizeLimit { d: usize, limit: usize },

    #[error("diagonal block {block} of Q is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularBlock { block: usize, min_eigenvalue: f64 },

    #[error(
        "divergence at iteration {iteration}: loss {loss} exceeds 1e3 x initial loss {initial}"
    )]
    Divergence {
        iteration: u64,
        loss: f64,
        initial: f64,
    },

    #[error("optimality certificate failed after {attempts} attempts: {detail}")]
    Certificate { attempts: usize, detail: String },

    #[error("generator: {0}")]
    Generator(String),

    #[error("protocol failure: {0}")]
    Protocol(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
