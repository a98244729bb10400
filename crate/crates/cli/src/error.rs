use std::fmt;
use std::process::ExitCode;

use lpp_core::moment::MomentError;
use lpp_core::pipeline::PipelineError;
use lpp_core::planning::PlanningError;

/// Error carrying its exit code: 2 for bad input, 3 when the numerical pipeline fails.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Solver(String),
}

impl CliError {
    pub fn code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Solver(_) => ExitCode::from(3),
        }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<PlanningError> for CliError {
    fn from(e: PlanningError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MomentError> for CliError {
    fn from(e: MomentError) -> Self {
        match e {
            MomentError::TooLarge(_) => CliError::Solver(e.to_string()),
            MomentError::Planning(p) => p.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Moment(m) => m.into(),
            PipelineError::Sdp(s) => CliError::Solver(s.to_string()),
        }
    }
}
