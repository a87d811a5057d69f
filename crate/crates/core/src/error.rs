//! Crate-wide error type.
//!
//! Variants are grouped so callers (notably the CLI) can map them onto
//! exit codes: configuration problems, data/schema problems, and oracle
//! problems are distinct failure classes.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A statement template breaks a structural invariant (e.g. the
    /// variable token "X" is missing or repeated).
    #[error("malformed template: {0}")]
    Template(String),

    /// Invalid configuration: bad parameters, bad CLI flags, infeasible
    /// generator specs.
    #[error("configuration error: {0}")]
    Config(String),

    /// The exact solver refuses problems above its variable cap.
    #[error("problem has {vars} variables, above the exact-solver cap of {cap}; use solve_local")]
    ExactCap { vars: usize, cap: usize },

    /// Structural data error (inconsistent graph, bank/assignment mismatch, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A record in a data file failed schema validation.
    #[error("schema violation in {file} record {record}: field `{field}`: {message}")]
    Schema {
        file: PathBuf,
        record: usize,
        field: String,
        message: String,
    },

    /// Transport-level oracle failure (connect/timeout). Retriable.
    #[error("oracle transport failure: {0}")]
    OracleTransport(String),

    /// The oracle endpoint answered with a non-success HTTP status.
    #[error("oracle endpoint returned status {0}")]
    OracleStatus(u16),

    /// The oracle answered, but the payload violates the wire contract.
    #[error("malformed oracle response: {0}")]
    OracleMalformed(String),

    /// Any other oracle-level failure (e.g. a statement outside the
    /// synthetic oracle's gold table).
    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code the CLI maps this error onto.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Template(_) | Error::Config(_) | Error::ExactCap { .. } => 1,
            Error::Data(_) | Error::Schema { .. } | Error::Io { .. } | Error::Json { .. } => 2,
            Error::OracleTransport(_)
            | Error::OracleStatus(_)
            | Error::OracleMalformed(_)
            | Error::Oracle(_) => 3,
        }
    }

    /// True for failures worth retrying against a remote endpoint.
    pub fn is_retriable(&self) -> bool {
        matches!(self, Error::OracleTransport(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
