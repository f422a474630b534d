//! Exact finite discrete probability.
//!
//! A [`JointDistribution`] is a weight table over full assignments of a
//! [`VariableSchema`]. Distributions are immutable; every transformation
//! returns a new, normalization-checked table.

mod joint;
mod probability;

pub use joint::{Cell, JointDistribution, Value, Variable, VariableSchema};
pub use probability::{Probability, Tolerance, FLOAT_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("not normalized: weights sum to {sum}, not 1")]
    NotNormalized { sum: String },
    #[error("negative weight {0}")]
    NegativeWeight(String),
    #[error("probability {0} exceeds 1")]
    OutOfRange(String),
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} is not in the domain of `{variable}`")]
    UnknownValue { variable: String, value: Value },
    #[error("assignment does not cover variable `{0}`")]
    IncompleteAssignment(String),
    #[error("duplicate assignment {0}")]
    DuplicateAssignment(String),
    #[error("conditioning event {0} has probability zero")]
    ZeroProbabilityCondition(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
}
