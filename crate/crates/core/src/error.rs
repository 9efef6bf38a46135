use thiserror::Error;

use crate::model::{AgentRef, Violation};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentRef),
    #[error("{metric} is only defined for SMTI instances")]
    UnsupportedMetric { metric: &'static str },
    #[error("malformed matching: {0}")]
    MalformedMatching(String),
    #[error("invalid tie-breaking strategy: {0}")]
    InvalidStrategy(String),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("equity mode requires SMTI")]
    EquityRequiresSmti,
    #[error("invalid solver parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
