use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },

    #[error("relation has {count} columns; at most {max} are supported")]
    TooManyColumns { count: usize, max: usize },

    #[error("row index {index} out of range for relation with {len} rows")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("query syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("variable `{0}` is not bound by any table")]
    UnknownVariable(String),

    #[error("duplicate table alias `{0}`")]
    DuplicateAlias(String),

    #[error("join graph is disconnected ({components} components); cartesian products are not supported")]
    DisconnectedGraph { components: usize },

    #[error("maxclique intersection graph is not connected")]
    NotConnected,

    #[error("relation `{relation}` has no column `{column}`")]
    UnknownColumn { relation: String, column: String },

    #[error("no relation loaded for `{0}`")]
    MissingRelation(String),

    #[error("frequency overflow: value exceeds the 64-bit unsigned range")]
    FrequencyOverflow,

    #[error("instance too large for the oracle: {estimate} tuples exceed the limit of {limit}")]
    TooLargeForOracle { estimate: f64, limit: u64 },

    #[error("inconsistent summary: {0}")]
    InconsistentSummary(String),

    #[error("summary format error: {0}")]
    Format(String),

    #[error("invalid elimination plan: {0}")]
    InvalidPlan(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Checked frequency arithmetic. Overflow is never allowed to wrap.
pub(crate) fn mul_freq(a: u64, b: u64) -> Result<u64> {
    a.checked_mul(b).ok_or(Error::FrequencyOverflow)
}

pub(crate) fn add_freq(a: u64, b: u64) -> Result<u64> {
    a.checked_add(b).ok_or(Error::FrequencyOverflow)
}
