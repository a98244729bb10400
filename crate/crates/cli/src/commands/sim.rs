use lpp_core::lie::trajectory;
use lpp_core::planning::Problem;
use lpp_core::sim::{simulate, SimError};

use super::{load, RunConfig};
use crate::error::CliError;
use crate::output::{csv_err, num, OutDir};
use crate::CommonArgs;

pub fn run(a: &CommonArgs) -> Result<(), CliError> {
    let file = load(&a.spec)?;
    let Problem::Sim(spec) = &file.problem else {
        return Err(CliError::Input("expected a problem of kind `sim`".into()));
    };
    let out = OutDir::create(&a.out)?;
    out.write_json(
        "run.json",
        &RunConfig {
            command: "sim",
            args: a,
            options: spec,
        },
    )?;
    let sim = simulate(spec).map_err(|e| match e {
        SimError::Spec(p) => p.into(),
        SimError::Integrator(l) => CliError::Solver(l.to_string()),
    })?;

    let mut w = out.csv("energy.csv")?;
    w.write_record(["k", "t", "lgvi", "euler"]).map_err(csv_err)?;
    for (k, (l, e)) in sim.lgvi_energy.iter().zip(&sim.euler_energy).enumerate() {
        w.write_record([k.to_string(), num(k as f64 * spec.h), num(*l), num(*e)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;

    let path = out.path("trajectory.csv");
    let f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    trajectory::write_csv(std::io::BufWriter::new(f), &sim.lgvi, &sim.lgvi_energy, spec.h)
        .map_err(|e| CliError::io(&path, e))?;
    out.write_json("summary.json", &sim.summary)?;
    Ok(())
}
