//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown observation `{0}`")]
    UnknownObservation(String),
    #[error("malformed data: {0}")]
    Shape(String),
    #[error("uncertainty set is empty under the given restrictions")]
    InfeasibleSet,
    #[error("assignment disagrees with the fixed variables")]
    InvalidChoice,
    #[error("observation has zero probability under the given belief and choices")]
    ImpossibleObservation,
    #[error("capacity exceeded: {count} exceeds the configured cap {cap}")]
    Capacity { count: u128, cap: u128 },
    #[error("contract violated: {0}")]
    Contract(String),
}
