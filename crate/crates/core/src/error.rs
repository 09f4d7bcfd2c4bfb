use std::io;

use thiserror::Error;

use crate::model::ValidationIssue;
use crate::state::NetworkState;

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid model: {}", join_issues(.0))]
    Validation(Vec<ValidationIssue>),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("{genes} genes exceed the exhaustive state-space limit of {limit}")]
    TooManyGenes { genes: usize, limit: usize },
    #[error("stationary distribution did not converge after {iterations} iterations (last L1 change {delta:e})")]
    NoConvergence { iterations: usize, delta: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("state {0} is not a registered (pseudo-)attractor state")]
    NotAtControlPoint(NetworkState),
    #[error("intervention flips {count} genes, at most {max} allowed")]
    TooManyFlips { count: usize, max: usize },
    #[error("intervention gene {gene} out of range for {genes} genes")]
    GeneOutOfRange { gene: usize, genes: usize },
    #[error("intervention lists gene {0} twice")]
    DuplicateGene(usize),
    #[error("episode already finished")]
    EpisodeDone,
    #[error("source and target must be nonempty and distinct")]
    InvalidProblem,
    #[error("source state {0} is not registered")]
    UnknownSource(NetworkState),
    #[error("state width {found} does not match the model's {expected} genes")]
    WidthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("non-finite loss at gradient step {step}: {loss}")]
    NonFiniteLoss { step: usize, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error("need at least two landmarks to form a source-target pair, found {0}")]
    TooFewLandmarks(usize),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("checkpoint expects {expected} inputs but the model gives {found} (2 x genes)")]
    InputMismatch { expected: usize, found: usize },
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] io::Error),
}
