use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed file {path}: {msg}")]
    Malformed { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Malformed { .. } => 2,
            CliError::Infeasible(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<minmax_core::Error> for CliError {
    fn from(e: minmax_core::Error) -> Self {
        use minmax_core::Error as E;
        match e {
            E::ScenarioInfeasible { .. } => CliError::Infeasible(e.to_string()),
            E::Solver { .. } | E::AgentFailure { .. } => CliError::Solver(e.to_string()),
            E::Io(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}
