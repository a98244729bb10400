//! `lpp`: certified motion planning from the command line.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpp_core::certify::RefineOptions;
use lpp_core::moment::{RelaxOptions, Sparsity};
use lpp_core::pipeline::PipelineOptions;
use lpp_core::sdp::SolverOptions;
use serde::Serialize;

use error::CliError;

#[derive(Parser)]
#[command(name = "lpp", version, about = "Moment relaxations for rigid-body motion planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inverse kinematics of a serial chain; sweeps a target grid when the spec has one.
    Ik(IkArgs),
    /// Drone trajectory planning.
    Drone(RunArgs),
    /// Integrator comparison on a free rigid body.
    Sim(CommonArgs),
    /// Writes the relaxation of a problem as SDPA plus a moment index.
    Relax(RunArgs),
    /// Solves an SDPA file; certifies it when a moment index is given.
    Solve(SolveArgs),
}

#[derive(Args, Clone, Serialize)]
pub struct CommonArgs {
    /// Input file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Seed for generated inputs; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Clone, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Relaxation order κ.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=3))]
    pub order: u32,
    #[arg(long, default_value = "cs", value_parser = parse_sparsity)]
    #[serde(serialize_with = "ser_display")]
    pub sparsity: Sparsity,
    /// Retry with the dense relaxation when the sparse one stalls.
    #[arg(long)]
    pub escalate: bool,
    /// Polish the extracted point with a local solver.
    #[arg(long)]
    pub refine: bool,
    #[arg(long, default_value_t = SolverOptions::default().max_iter)]
    pub max_iter: usize,
    /// Feasibility and gap tolerance of the interior-point method.
    #[arg(long, default_value_t = SolverOptions::default().feas_tol)]
    pub tol: f64,
}

#[derive(Args, Clone, Serialize)]
pub struct IkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// Solve this many random reachable targets (drawn with `--seed`) instead of the spec target.
    #[arg(long)]
    pub random: Option<usize>,
    /// Worker threads for sweeps; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Write zero wall times so sweep artifacts are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Args, Clone, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// `moment_index.json` written by `lpp relax`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long, default_value_t = SolverOptions::default().max_iter)]
    pub max_iter: usize,
    #[arg(long, default_value_t = SolverOptions::default().feas_tol)]
    pub tol: f64,
}

fn parse_sparsity(s: &str) -> Result<Sparsity, String> {
    s.parse()
}

fn ser_display<S: serde::Serializer>(v: &Sparsity, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn solver_options(max_iter: usize, tol: f64) -> Result<SolverOptions, CliError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Input(format!("--tol must lie in (0, 1), got {tol}")));
    }
    Ok(SolverOptions {
        max_iter,
        feas_tol: tol,
        gap_tol: tol,
        infeas_tol: tol,
        ..Default::default()
    })
}

impl RunArgs {
    pub fn pipeline(&self) -> Result<PipelineOptions, CliError> {
        Ok(PipelineOptions {
            relax: RelaxOptions {
                order: self.order,
                sparsity: self.sparsity,
                ..Default::default()
            },
            solver: solver_options(self.max_iter, self.tol)?,
            refine: self.refine.then(RefineOptions::default),
            escalate: self.escalate,
            ..Default::default()
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Ik(a) => commands::ik::run(a),
        Command::Drone(a) => commands::drone::run(a),
        Command::Sim(a) => commands::sim::run(a),
        Command::Relax(a) => commands::relax::run(a),
        Command::Solve(a) => commands::solve::run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lpp: {e}");
            e.code()
        }
    }
}
