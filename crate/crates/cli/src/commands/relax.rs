use lpp_core::moment::{relax, to_conic, BlockSlot, Elimination, MomentError, Relaxation};
use lpp_core::planning::{PlanningPop, Problem};
use lpp_core::poly::text::monomial_text;
use lpp_core::sdp::sdpa::to_sdpa;
use serde::{Deserialize, Serialize};

use super::{load, RunConfig};
use crate::error::CliError;
use crate::output::OutDir;
use crate::RunArgs;

/// Contents of `moment_index.json`: how SDPA variables map back to pseudo-moments, and what
/// `lpp solve --index` needs to certify a solution.
#[derive(Serialize, Deserialize)]
pub struct MomentIndexFile {
    pub schema: String,
    /// Pseudo-moment names by position.
    pub moments: Vec<String>,
    /// Moment position of each SDPA variable `y_1, y_2, ...`.
    pub sdpa_variables: Vec<usize>,
    /// The relaxation value is `offset − bᵀy`.
    pub offset: f64,
    pub elimination: Elimination,
    pub slots: Vec<Option<BlockSlot>>,
    pub pop: PlanningPop,
    pub relaxation: Relaxation,
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let file = load(&a.common.spec)?;
    if matches!(file.problem, Problem::Sim(_)) {
        return Err(CliError::Input("simulation files have no relaxation".into()));
    }
    let pop = file.build_pop()?;
    let opts = a.pipeline()?;
    let out = OutDir::create(&a.common.out)?;
    out.write_json(
        "run.json",
        &RunConfig {
            command: "relax",
            args: a,
            options: &opts,
        },
    )?;
    let relaxation = match relax(&pop, &opts.relax) {
        Err(MomentError::Infeasible(msg)) => {
            println!("infeasible: {msg}");
            return Ok(());
        }
        r => r?,
    };
    let program = match to_conic(&relaxation.sdp) {
        Err(MomentError::Infeasible(msg)) => {
            println!("infeasible: {msg}");
            return Ok(());
        }
        r => r?,
    };
    out.write("relaxation.dat-s", &to_sdpa(&program.conic))?;
    let reg = &relaxation.presolved.pop.registry;
    let index = MomentIndexFile {
        schema: lpp_core::planning::spec::SCHEMA.to_string(),
        moments: relaxation.sdp.index.moments().iter().map(|m| monomial_text(m, reg)).collect(),
        sdpa_variables: program.elim.free.clone(),
        offset: program.offset,
        elimination: program.elim,
        slots: program.slots,
        pop,
        relaxation,
    };
    out.write_json("moment_index.json", &index)?;
    println!(
        "{} pseudo-moments, {} SDPA variables, {} blocks",
        index.moments.len(),
        index.sdpa_variables.len(),
        program.conic.blocks.len()
    );
    Ok(())
}
