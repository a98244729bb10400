pub mod drone;
pub mod ik;
pub mod relax;
pub mod sim;
pub mod solve;

use std::fs;
use std::path::Path;

use lpp_core::certify::Feasibility;
use lpp_core::planning::ProblemFile;
use serde::Serialize;

use crate::error::CliError;

pub fn load(path: &Path) -> Result<ProblemFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ProblemFile::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn verdict(f: Feasibility) -> &'static str {
    match f {
        Feasibility::Feasible => "feasible",
        Feasibility::Infeasible => "infeasible",
        Feasibility::Undecided => "undecided",
    }
}

/// Contents of `run.json`: the command line and the options it resolved to.
#[derive(Serialize)]
pub struct RunConfig<'a, A: Serialize, O: Serialize> {
    pub command: &'a str,
    pub args: &'a A,
    pub options: &'a O,
}
