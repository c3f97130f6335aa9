use thiserror::Error;

use crate::model::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("state space is unbounded: species {0} is not covered by any conserve or bound constraint")]
    UnboundedStateSpace(String),

    #[error("state space is empty: no nonnegative state satisfies the constraints")]
    EmptyStateSpace,

    #[error("ambiguous edge from state {from} to state {to}: labels {first} and {second}")]
    AmbiguousEdge {
        from: usize,
        to: usize,
        first: String,
        second: String,
    },

    #[error("cycle budget exceeded: more than {0} elementary circuits")]
    CycleBudgetExceeded(usize),

    #[error("singular denominator: sum of (N-1)-minors is {0:e}, the chain is likely reducible")]
    SingularDenominator(f64),

    #[error("cycle {0} is missing an edge label")]
    MissingLabel(String),

    #[error("cycle {cycle} is not closed under the Y stoichiometry (net counts {net:?})")]
    ClosureViolation { cycle: String, net: Vec<i64> },

    #[error("state {0} is absorbing (zero exit rate)")]
    AbsorbingState(usize),

    #[error("concentration assignment: {0}")]
    Assignment(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
