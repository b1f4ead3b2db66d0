//! Error type shared by every module.

use thiserror::Error;

/// Library-wide error type.
///
/// The CLI maps the variants onto process exit codes: validation-type
/// failures (invalid input, domain, contraction, parse) exit 2, exceeding
/// the enumeration budget exits 3, numeric degeneracy exits 4, and plain
/// I/O failures exit 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input: non-finite entries, shape mismatches,
    /// singular linear parts where invertibility is required.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter outside its documented domain (s out of range, bad
    /// probabilities, out-of-range letters, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested enumeration exceeds the configured leaf budget.
    #[error("budget exceeded: requested depth {requested_n} needs about {requested_leaves} leaf evaluations (budget {budget}); max feasible depth is {max_feasible_n}")]
    Budget {
        requested_n: usize,
        requested_leaves: u128,
        budget: u64,
        max_feasible_n: usize,
    },

    /// An operation that needs a contracting system was given one that is
    /// not contracting in the Euclidean operator norm.
    #[error("contraction error: {0}")]
    Contraction(String),

    /// A numerically degenerate situation the caller asked us to treat as
    /// fatal (e.g. a degenerate box-count fit requested strictly).
    #[error("degenerate value: {0}")]
    Degenerate(String),

    /// Malformed configuration or result document.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn contraction(msg: impl Into<String>) -> Self {
        Error::Contraction(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Domain(_) => "domain",
            Error::Budget { .. } => "budget",
            Error::Contraction(_) => "contraction",
            Error::Degenerate(_) => "degenerate",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code the CLI uses for this variant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Domain(_) | Error::Contraction(_) | Error::Parse(_) => 2,
            Error::Budget { .. } => 3,
            Error::Degenerate(_) => 4,
            Error::Io(_) => 1,
        }
    }
}
