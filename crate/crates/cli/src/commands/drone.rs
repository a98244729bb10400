use lpp_core::lie::{discrete_energy, trajectory};
use lpp_core::pipeline::solve_pop;
use lpp_core::planning::{build_drone_pop, DroneVars, Problem};
use serde::Serialize;

use super::{load, RunConfig};
use crate::error::CliError;
use crate::output::{check_status, csv_err, num, solver_log, write_certificate, OutDir};
use crate::RunArgs;

#[derive(Serialize)]
struct Summary {
    horizon: usize,
    h: f64,
    /// Largest equality residual (dynamics and group constraints) at the reported point.
    dynamics_residual: Option<f64>,
    inequality_violation: Option<f64>,
    final_position: Option<[f64; 3]>,
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let file = load(&a.common.spec)?;
    let Problem::Drone(spec) = &file.problem else {
        return Err(CliError::Input("expected a problem of kind `drone`".into()));
    };
    let body = spec.validate()?;
    let opts = a.pipeline()?;
    let out = OutDir::create(&a.common.out)?;
    out.write_json(
        "run.json",
        &RunConfig {
            command: "drone",
            args: a,
            options: &opts,
        },
    )?;
    let pop = build_drone_pop(spec)?;
    let res = solve_pop(&pop, &opts)?;
    write_certificate(&out, &res.certificate, &pop)?;
    out.write("solver.log", &solver_log(&res))?;

    let mut summary = Summary {
        horizon: spec.horizon,
        h: spec.h,
        dynamics_residual: None,
        inequality_violation: None,
        final_position: None,
    };
    if let Some(x) = &res.point {
        let vars = DroneVars::from_pop(&pop).expect("drone problem");
        let states: Vec<_> = (0..vars.steps.len()).map(|k| vars.state(k, x)).collect();
        let energy: Vec<f64> = states.iter().map(|s| discrete_energy(s, &body, spec.h)).collect();
        let path = out.path("trajectory.csv");
        let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        trajectory::write_csv(std::io::BufWriter::new(f), &states, &energy, spec.h)
            .map_err(|e| CliError::io(&path, e))?;

        let mut w = out.csv("inputs.csv")?;
        w.write_record(["k", "t", "tau0", "tau1", "tau2", "fz"]).map_err(csv_err)?;
        for k in 0..vars.inputs.len() {
            let u = vars.input(k, x);
            w.write_record([
                k.to_string(),
                num(k as f64 * spec.h),
                num(u.tau.x),
                num(u.tau.y),
                num(u.tau.z),
                num(u.fz),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(csv_err)?;

        let (eq, ineq) = pop.violation(x);
        let last = &states[states.len() - 1].p;
        summary.dynamics_residual = Some(eq);
        summary.inequality_violation = Some(ineq);
        summary.final_position = Some([last.x, last.y, last.z]);
    }
    out.write_json("summary.json", &summary)?;
    check_status(&res)
}
