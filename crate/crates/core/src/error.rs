//! Error type shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes surfaced by the library.
///
/// The variants map onto distinct process exit codes in the CLI: domain and
/// hypothesis violations (1), infeasible constructions (3), depth or budget
/// exhaustion (4).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside an operation's documented domain.
    Domain(String),
    /// A stated mathematical hypothesis does not hold for the given input.
    Hypothesis(String),
    /// The interval construction cannot satisfy its constraints.
    Infeasible(String),
    /// A recursion or enumeration would exceed the configured order cap.
    DepthExceeded(String),
    /// An exhaustive search would exceed its size budget.
    BudgetExceeded(String),
    /// A growth schedule entry exceeds the order cap; carries the last
    /// representable entry.
    CappedSchedule { last: u64, requested: usize },
    /// A loaded model violates its own integrity conditions (e.g. a weight
    /// table that is not additive).
    ModelIntegrity(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Hypothesis(m) => write!(f, "hypothesis violated: {m}"),
            Error::Infeasible(m) => write!(f, "infeasible construction: {m}"),
            Error::DepthExceeded(m) => write!(f, "depth exceeded: {m}"),
            Error::BudgetExceeded(m) => write!(f, "budget exceeded: {m}"),
            Error::CappedSchedule { last, requested } => write!(
                f,
                "schedule entry {requested} exceeds the order cap; last representable entry is {last}"
            ),
            Error::ModelIntegrity(m) => write!(f, "model integrity: {m}"),
        }
    }
}

impl std::error::Error for Error {}
