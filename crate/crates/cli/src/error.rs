use crate::scenario_file::ScenarioFileError;

/// Failure of a command, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Scenario(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Scenario(_) | Self::Io(_) => 2,
            Self::Solver(_) => 3,
        }
    }

    /// Errors from a solver call: bad arguments are usage errors, the rest
    /// are solver failures.
    pub fn from_solver(e: macgame::Error) -> Self {
        match e {
            macgame::Error::InvalidParameter(_) | macgame::Error::UnknownPreset { .. } => Self::Usage(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }

    pub fn from_simulation(e: macgame::Error) -> Self {
        Self::Scenario(e.to_string())
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> Self {
        Self::Scenario(e.to_string())
    }
}
