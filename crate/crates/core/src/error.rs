//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors raised by ingestion, detection, inference, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an edge list or region log could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A duplicate edge was seen while `dedup = error` was in force.
    #[error("duplicate edge at line {line}: {a} -- {b}")]
    DuplicateEdge { line: usize, a: String, b: String },

    /// Modularity is undefined: empty graph or zero total edge weight.
    #[error("modularity undefined: {reason}")]
    UndefinedScore { reason: String },

    /// An operation that needs at least one record received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Generator parameters put some pair outside the sparse-model regime.
    #[error("dense regime: pair mean {mean:.3} exceeds cap {cap:.3}; scale degrees or affinities down")]
    DenseRegime { mean: f64, cap: f64 },

    /// A belief update produced an all-zero message that cannot be normalized.
    #[error("renormalization failure on message {from} -> {to}")]
    RenormalizationFailure { from: usize, to: usize },

    /// A two-node marginal block had a zero normalizer.
    #[error("degenerate edge {a} -- {b}: zero two-node normalizer")]
    DegenerateEdge { a: usize, b: usize },

    /// Every restart collapsed a group; the requested k is likely too large.
    #[error("degenerate fit: all {restarts} restarts hit group collapse; try a smaller k")]
    DegenerateFit { restarts: usize },

    /// Exact enumeration would visit more states than the configured limit.
    #[error("state limit: k^n = {states:.3e} exceeds limit {limit:.3e}")]
    StateLimit { states: f64, limit: f64 },

    /// A precondition on the inputs does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Underlying I/O failure while reading a stream.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
