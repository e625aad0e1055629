use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {}", join_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("community {0} has no members")]
    EmptyCommunity(usize),

    #[error("edge probability {prob} exceeds 1 for pair ({i}, {j})")]
    ProbabilityAboveOne { i: usize, j: usize, prob: f64 },

    #[error("spread operator entry {value} at ({i}, {j}) is outside [0, 1]")]
    OperatorEntry { i: usize, j: usize, value: f64 },

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("time {requested} exceeds trace horizon {horizon}")]
    BeyondHorizon { requested: usize, horizon: usize },

    #[error("seed budget {budget} exceeds available nodes {available}")]
    BudgetTooLarge { budget: usize, available: usize },

    #[error("no feasible starting point: {0}")]
    Infeasible(String),

    #[error("objective is not finite at x = {0:?}")]
    NonFinite(Vec<f64>),

    #[error(
        "network is disconnected ({components} components); use the largest connected component"
    )]
    Disconnected { components: usize },

    #[error("node {0} has zero degree")]
    ZeroDegree(usize),

    #[error("eigensolver: {0}")]
    Eigen(String),

    #[error("transmission spec: {0}")]
    Transmission(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("label given for unknown node {0:?}")]
    UnknownNode(String),

    #[error("config: {0}")]
    Config(String),

    #[error("experiment {id}: {source}")]
    Experiment {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
