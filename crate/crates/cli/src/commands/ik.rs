use std::f64::consts::PI;
use std::time::Instant;

use lpp_core::pipeline::{solve_pop, Outcome, PipelineOptions};
use lpp_core::planning::{build_ik_pop, IkSpec, IkVars, PlanningPop, Problem};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{load, verdict, RunConfig};
use crate::error::CliError;
use crate::output::{check_status, csv_err, num, opt_num, solver_log, write_certificate, OutDir};
use crate::IkArgs;

pub fn run(a: &IkArgs) -> Result<(), CliError> {
    let file = load(&a.run.common.spec)?;
    let Problem::Ik(p) = &file.problem else {
        return Err(CliError::Input("expected a problem of kind `ik`".into()));
    };
    p.spec.validate()?;
    let opts = a.run.pipeline()?;
    let out = OutDir::create(&a.run.common.out)?;
    out.write_json(
        "run.json",
        &RunConfig {
            command: "ik",
            args: a,
            options: &opts,
        },
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    if let Some(n) = a.random {
        return pool.install(|| random_targets(&p.spec, n, a, &opts, &out));
    }
    if let Some(sweep) = &p.sweep {
        let points = sweep.points()?;
        return pool.install(|| feasibility_map(&p.spec, &points, a.no_timing, &opts, &out));
    }
    single(&p.spec, &opts, &out)
}

fn single(spec: &IkSpec, opts: &PipelineOptions, out: &OutDir) -> Result<(), CliError> {
    let pop = build_ik_pop(spec)?;
    let res = solve_pop(&pop, opts)?;
    write_certificate(out, &res.certificate, &pop)?;
    out.write("solver.log", &solver_log(&res))?;
    if let Some(x) = &res.point {
        write_angles(out, &pop, x)?;
        write_poses(out, &pop, x)?;
    }
    check_status(&res)
}

fn write_angles(out: &OutDir, pop: &PlanningPop, x: &[f64]) -> Result<(), CliError> {
    let vars = IkVars::from_pop(pop).expect("ik problem");
    let mut w = out.csv("angles.csv")?;
    w.write_record(["joint", "theta_rad", "theta_deg", "c", "s"]).map_err(csv_err)?;
    for (j, t) in vars.angles(x).iter().enumerate() {
        w.write_record([
            (j + 1).to_string(),
            num(*t),
            num(t.to_degrees()),
            num(x[vars.c[j].index()]),
            num(x[vars.s[j].index()]),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn write_poses(out: &OutDir, pop: &PlanningPop, x: &[f64]) -> Result<(), CliError> {
    let vars = IkVars::from_pop(pop).expect("ik problem");
    let mut w = out.csv("poses.csv")?;
    let mut head = vec!["frame".to_string()];
    head.extend((0..3).flat_map(|i| (0..3).map(move |j| format!("R{i}{j}"))));
    head.extend(["p0", "p1", "p2"].map(String::from));
    w.write_record(&head).map_err(csv_err)?;
    for j in 0..vars.poses.len() {
        let pose = vars.pose(j, x);
        let mut row = vec![j.to_string()];
        row.extend((0..3).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| num(pose.rotation[(r, c)])));
        row.extend(pose.position.iter().map(|v| num(*v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn solve_target(spec: &IkSpec, opts: &PipelineOptions) -> Result<(PlanningPop, Outcome), CliError> {
    let pop = build_ik_pop(spec)?;
    let res = solve_pop(&pop, opts)?;
    Ok((pop, res))
}

fn feasibility_map(
    spec: &IkSpec,
    points: &[Vector3<f64>],
    no_timing: bool,
    opts: &PipelineOptions,
    out: &OutDir,
) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = points
        .par_iter()
        .map(|pt| {
            let mut s = spec.clone();
            s.target.position = *pt;
            let t0 = Instant::now();
            let res = solve_target(&s, opts);
            let wall = if no_timing { 0.0 } else { t0.elapsed().as_secs_f64() };
            let mut row: Vec<String> = pt.iter().map(|v| num(*v)).collect();
            match res {
                Ok((_, r)) => {
                    let c = &r.certificate;
                    row.extend([
                        verdict(c.feasibility).to_string(),
                        opt_num(c.delta),
                        opt_num(c.epsilon.map(|e| e.value())),
                    ]);
                }
                Err(e) => row.extend([format!("error: {e}"), String::new(), String::new()]),
            }
            row.push(num(wall));
            row
        })
        .collect();
    let mut w = out.csv("feasibility.csv")?;
    w.write_record(["x", "y", "z", "verdict", "delta", "epsilon", "wall_time_s"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn angle_error(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn random_targets(spec: &IkSpec, n: usize, a: &IkArgs, opts: &PipelineOptions, out: &OutDir) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.run.common.seed);
    let dof = spec.dof();
    let draws: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dof).map(|_| rng.random_range(-PI..PI)).collect())
        .collect();
    let rows: Vec<Vec<String>> = draws
        .par_iter()
        .enumerate()
        .map(|(i, angles)| {
            let mut s = spec.clone();
            s.target = spec.forward_kinematics(angles).pop().expect("at least one frame");
            let t0 = Instant::now();
            let res = solve_target(&s, opts);
            let wall = if a.no_timing { 0.0 } else { t0.elapsed().as_secs_f64() };
            let mut row = vec![i.to_string()];
            row.extend(angles.iter().map(|t| num(*t)));
            match res {
                Ok((pop, r)) => {
                    let found = r.point.as_ref().map(|x| IkVars::from_pop(&pop).expect("ik problem").angles(x));
                    match &found {
                        Some(f) => row.extend(f.iter().map(|t| num(*t))),
                        None => row.extend(std::iter::repeat_n(String::new(), dof)),
                    }
                    let err = found.map(|f| f.iter().zip(angles).map(|(x, y)| angle_error(*x, *y)).fold(0.0, f64::max));
                    let c = &r.certificate;
                    row.extend([
                        opt_num(err),
                        opt_num(c.delta),
                        opt_num(c.epsilon.map(|e| e.value())),
                        verdict(c.feasibility).to_string(),
                    ]);
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), dof + 3));
                    row.push(format!("error: {e}"));
                }
            }
            row.push(num(wall));
            row
        })
        .collect();
    let mut w = out.csv("random.csv")?;
    let mut head = vec!["index".to_string()];
    head.extend((1..=dof).map(|j| format!("theta_true_{j}")));
    head.extend((1..=dof).map(|j| format!("theta_{j}")));
    head.extend(["max_angle_diff", "delta", "epsilon", "verdict", "wall_time_s"].map(String::from));
    w.write_record(&head).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
