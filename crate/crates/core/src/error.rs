use thiserror::Error;

use crate::lp::LpStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no connected graph found after {tries} tries (n={n}, p={p}); p is likely too small")]
    NotConnectedAfterRetries { n: usize, p: f64, tries: usize },

    #[error("graph is not connected")]
    Disconnected,

    #[error("edge list parse error on line {line}: {msg}")]
    EdgeListParse { line: usize, msg: String },

    #[error("solver returned {status:?}: {context}")]
    Solver { status: LpStatus, context: String },

    #[error("agent {agent} failed in round {round}: {source}")]
    AgentFailure {
        agent: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("generated scenario is infeasible for agent {agent}")]
    ScenarioInfeasible { agent: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
