//! End-to-end solve of a planning problem: presolve, relax, solve, certify, refine.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{
    classify_feasibility, clique_ranks, extract_point, refine_local, suboptimality, Certificate,
    Feasibility, RefineOptions, Refined, RelaxStatus, DELTA_TOL, INFEASIBILITY_THRESHOLD,
    RANK_CUTOFF,
};
use crate::moment::{relax, to_conic, MomentError, MomentProgram, RelaxOptions, Relaxation, Sparsity};
use crate::planning::PlanningPop;
use crate::sdp::{solve, SdpError, SdpSolution, SolveStatus, SolverOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub relax: RelaxOptions,
    pub solver: SolverOptions,
    pub delta_tol: f64,
    pub rank_cutoff: f64,
    pub threshold: f64,
    pub refine: Option<RefineOptions>,
    /// Retry with a dense relaxation when the sparse one makes slow progress.
    pub escalate: bool,
    /// When extraction is refused, still start refinement from the first-order moments.
    pub warm_start: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            relax: RelaxOptions::default(),
            solver: SolverOptions::default(),
            delta_tol: DELTA_TOL,
            rank_cutoff: RANK_CUTOFF,
            threshold: INFEASIBILITY_THRESHOLD,
            refine: None,
            escalate: false,
            warm_start: true,
        }
    }
}

/// Size and timing of one run. Times are wall-clock seconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub moments: usize,
    pub free_moments: usize,
    pub psd_blocks: usize,
    pub largest_block: usize,
    pub iterations: usize,
    pub relax_time: f64,
    pub solve_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub certificate: Certificate,
    /// Best available point over the registry: refined if refinement ran, else extracted.
    pub point: Option<Vec<f64>>,
    pub refined: Option<Refined>,
    pub relaxation: Option<Relaxation>,
    pub program: Option<MomentProgram>,
    pub solution: Option<SdpSolution>,
    pub sparsity: Sparsity,
    pub stats: RunStats,
}

impl Outcome {
    fn infeasible(reason: String, sparsity: Sparsity, stats: RunStats) -> Self {
        Outcome {
            certificate: Certificate {
                status: RelaxStatus::Infeasible,
                rho_sdp: None,
                rho_ref: None,
                epsilon: None,
                delta: None,
                delta_per_clique: Vec::new(),
                rank_per_clique: Vec::new(),
                rank_condition: None,
                optimizers: None,
                point: None,
                feasibility: Feasibility::Infeasible,
                refined: None,
                note: Some(reason),
            },
            point: None,
            refined: None,
            relaxation: None,
            program: None,
            solution: None,
            sparsity,
            stats,
        }
    }
}

pub fn relax_status(st: &SolveStatus) -> RelaxStatus {
    match st {
        SolveStatus::Optimal => RelaxStatus::Optimal,
        SolveStatus::NearOptimal => RelaxStatus::NearOptimal,
        SolveStatus::DualInfeasible { .. } => RelaxStatus::Infeasible,
        SolveStatus::PrimalInfeasible { .. } => RelaxStatus::Unbounded,
        SolveStatus::SlowProgress => RelaxStatus::SlowProgress,
        SolveStatus::IterationLimit => RelaxStatus::IterationLimit,
    }
}

fn named_point(pop: &PlanningPop, x: &[f64]) -> BTreeMap<String, f64> {
    pop.registry
        .ids()
        .map(|v| (pop.registry.name(v).to_string(), x[v.index()]))
        .collect()
}

/// Certifies a solved relaxation and optionally refines the extracted point.
pub fn certify_solution(
    pop: &PlanningPop,
    relaxation: Relaxation,
    program: MomentProgram,
    solution: SdpSolution,
    status: SolveStatus,
    opts: &PipelineOptions,
    mut stats: RunStats,
) -> Outcome {
    let rstatus = relax_status(&status);
    let sparsity = relaxation.options.sparsity;
    stats.iterations = solution.iterations;
    if rstatus == RelaxStatus::Infeasible || rstatus == RelaxStatus::Unbounded {
        let mut out = Outcome::infeasible(
            format!("semidefinite program reported {}", status.name()),
            sparsity,
            stats,
        );
        out.certificate.status = rstatus;
        out.certificate.feasibility = classify_feasibility(rstatus, f64::NEG_INFINITY, opts.threshold);
        out.solution = Some(solution);
        out.relaxation = Some(relaxation);
        out.program = Some(program);
        return out;
    }

    let rho = program.relaxation_value(solution.dual_obj);
    let y = program.elim.expand(solution.y.as_slice());
    let ranks = clique_ranks(&y, &relaxation.sdp.index, opts.rank_cutoff);
    let deltas: Vec<f64> = ranks.iter().map(|r| r.delta).collect();
    let delta = deltas.iter().copied().fold(0.0, f64::max);
    let rank_condition = ranks.iter().all(|r| r.rank == r.rank_lower);
    let mut notes = Vec::new();
    if ranks.iter().any(|r| r.degenerate) {
        notes.push("zero moment matrix in some clique".to_string());
    }

    let extracted = extract_point(&y, &relaxation.sdp.index, &relaxation.presolved, &deltas, opts.delta_tol);
    let mut point = extracted.as_ref().ok().cloned();
    if let Err(d) = &extracted {
        notes.push(format!("rank ratio {d:e} above tolerance, no point extracted"));
    }

    let mut start = point.clone();
    if start.is_none() && opts.warm_start && opts.refine.is_some() && y[0] > 0.0 {
        let idx = &relaxation.sdp.index;
        let values = relaxation
            .presolved
            .alive()
            .into_iter()
            .map(|v| (v, y[idx.first_order(v).expect("alive variable has a moment")] / y[0]))
            .collect();
        start = Some(relaxation.presolved.reconstruct(&values));
        notes.push("refinement warm-started from first-order moments".into());
    }

    let mut refined = None;
    let mut rho_ref = None;
    if let Some(x0) = &start {
        if let Some(ropts) = &opts.refine {
            let r = refine_local(&relaxation.presolved.pop, x0, ropts);
            let values = relaxation
                .presolved
                .alive()
                .into_iter()
                .map(|v| (v, r.x[v.index()]))
                .collect();
            let x = relaxation.presolved.reconstruct(&values);
            if r.converged {
                rho_ref = Some(pop.objective.eval(&x));
            } else {
                notes.push("local refinement did not converge".into());
            }
            point = Some(x);
            refined = Some(r);
        } else {
            let (eq, ineq) = pop.violation(x0);
            if eq <= 1e-8 && ineq <= 1e-8 {
                rho_ref = Some(pop.objective.eval(x0));
            }
        }
    }
    let epsilon = rho_ref.map(|r| suboptimality(rho, r));
    if let (Some(r), Some(e)) = (rho_ref, epsilon) {
        if r < 0.0 {
            notes.push(format!("negative reference objective, epsilon sign is flipped ({e:?})"));
        }
    }

    let certificate = Certificate {
        status: rstatus,
        rho_sdp: Some(rho),
        rho_ref,
        epsilon,
        delta: Some(delta),
        delta_per_clique: deltas,
        rank_per_clique: ranks.iter().map(|r| r.rank).collect(),
        rank_condition: Some(rank_condition),
        optimizers: rank_condition.then(|| ranks.iter().map(|r| r.rank).max().unwrap_or(1)),
        point: point.as_ref().map(|x| named_point(pop, x)),
        feasibility: classify_feasibility(rstatus, rho, opts.threshold),
        refined: refined.as_ref().map(|r| r.converged),
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    };
    Outcome {
        certificate,
        point,
        refined,
        relaxation: Some(relaxation),
        program: Some(program),
        solution: Some(solution),
        sparsity,
        stats,
    }
}

fn run_once(pop: &PlanningPop, opts: &PipelineOptions) -> Result<Outcome, PipelineError> {
    let sparsity = opts.relax.sparsity;
    let t0 = Instant::now();
    let relaxation = match relax(pop, &opts.relax) {
        Ok(r) => r,
        Err(MomentError::Infeasible(msg)) => {
            return Ok(Outcome::infeasible(format!("presolve: {msg}"), sparsity, RunStats::default()))
        }
        Err(e) => return Err(e.into()),
    };
    let program = match to_conic(&relaxation.sdp) {
        Ok(p) => p,
        Err(MomentError::Infeasible(msg)) => {
            return Ok(Outcome::infeasible(msg, sparsity, RunStats::default()))
        }
        Err(e) => return Err(e.into()),
    };
    let mut stats = RunStats {
        moments: relaxation.sdp.index.len(),
        free_moments: program.elim.free.len(),
        psd_blocks: relaxation.sdp.blocks.iter().filter(|b| b.size > 1).count(),
        largest_block: relaxation.sdp.blocks.iter().map(|b| b.size).max().unwrap_or(0),
        relax_time: t0.elapsed().as_secs_f64(),
        ..Default::default()
    };
    let t1 = Instant::now();
    let (solution, status) = solve(&program.conic, &opts.solver)?;
    stats.solve_time = t1.elapsed().as_secs_f64();
    Ok(certify_solution(pop, relaxation, program, solution, status, opts, stats))
}

/// Runs the whole pipeline on `pop`.
pub fn solve_pop(pop: &PlanningPop, opts: &PipelineOptions) -> Result<Outcome, PipelineError> {
    let out = run_once(pop, opts)?;
    if opts.escalate
        && opts.relax.sparsity == Sparsity::Correlative
        && out.certificate.status == RelaxStatus::SlowProgress
    {
        let mut dense = opts.clone();
        dense.relax.sparsity = Sparsity::Dense;
        return run_once(pop, &dense);
    }
    Ok(out)
}
