use std::fs;

use lpp_core::moment::MomentProgram;
use lpp_core::pipeline::{certify_solution, PipelineOptions, RunStats};
use lpp_core::sdp::sdpa::from_sdpa;
use lpp_core::sdp::{solve, BlockMat, SolveStatus};
use serde::Serialize;

use super::relax::MomentIndexFile;
use super::RunConfig;
use crate::error::CliError;
use crate::output::{check_status, write_certificate, OutDir};
use crate::{solver_options, SolveArgs};

#[derive(Serialize)]
struct SolutionFile<'a> {
    status: &'a str,
    primal_obj: f64,
    dual_obj: f64,
    iterations: usize,
    y: &'a [f64],
    x: &'a [BlockMat],
    s: &'a [BlockMat],
}

pub fn run(a: &SolveArgs) -> Result<(), CliError> {
    let path = &a.common.spec;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let sdp = from_sdpa(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let index: Option<MomentIndexFile> = match &a.index {
        Some(p) => {
            let t = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Some(serde_json::from_str(&t).map_err(|e| CliError::io(p, e))?)
        }
        None => None,
    };
    let opts = solver_options(a.max_iter, a.tol)?;
    let out = OutDir::create(&a.common.out)?;
    out.write_json(
        "run.json",
        &RunConfig {
            command: "solve",
            args: a,
            options: &opts,
        },
    )?;
    let (sol, status) = solve(&sdp, &opts).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut log = String::from("iter, mu, pres, dres, gap, step\n");
    for l in &sol.log {
        log.push_str(&l.line());
        log.push('\n');
    }
    out.write("solver.log", &log)?;
    out.write_json(
        "solution.json",
        &SolutionFile {
            status: status.name(),
            primal_obj: sol.primal_obj,
            dual_obj: sol.dual_obj,
            iterations: sol.iterations,
            y: sol.y.as_slice(),
            x: &sol.x,
            s: &sol.s,
        },
    )?;
    println!("{} primal {:e} dual {:e}", status.name(), sol.primal_obj, sol.dual_obj);

    if let Some(ix) = index {
        if ix.sdpa_variables.len() != sdp.num_constraints() {
            return Err(CliError::Input("moment index does not match the SDPA file".into()));
        }
        let popts = PipelineOptions {
            relax: ix.relaxation.options.clone(),
            solver: opts,
            ..Default::default()
        };
        let program = MomentProgram {
            conic: sdp,
            elim: ix.elimination,
            offset: ix.offset,
            slots: ix.slots,
        };
        let res = certify_solution(&ix.pop, ix.relaxation, program, sol, status, &popts, RunStats::default());
        write_certificate(&out, &res.certificate, &ix.pop)?;
        return check_status(&res);
    }
    match status {
        SolveStatus::SlowProgress | SolveStatus::IterationLimit => {
            Err(CliError::Solver(format!("solver stopped with status {}", status.name())))
        }
        _ => Ok(()),
    }
}
