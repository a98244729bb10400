//! Artifact writing and certificate re-validation.

use std::fs;
use std::path::{Path, PathBuf};

use lpp_core::certify::{Certificate, RelaxStatus};
use lpp_core::pipeline::Outcome;
use lpp_core::planning::PlanningPop;
use serde::Serialize;

use crate::error::CliError;

/// Residual allowed at a refined point when the certificate is re-checked.
const REFINED_TOL: f64 = 1e-6;

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Solver(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<fs::File>, CliError> {
        let p = self.path(name);
        csv::Writer::from_path(&p).map_err(|e| CliError::io(&p, e))
    }
}

pub fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("writing csv: {e}"))
}

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `certificate.json`, reads it back and re-checks it against `pop`.
pub fn write_certificate(out: &OutDir, cert: &Certificate, pop: &PlanningPop) -> Result<(), CliError> {
    let path = out.write_json("certificate.json", cert)?;
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let back: Certificate = serde_json::from_str(&text)
        .map_err(|e| CliError::Solver(format!("certificate does not reload: {e}")))?;
    if &back != cert {
        return Err(CliError::Solver("certificate changed on reload".into()));
    }
    revalidate(&back, pop).map_err(CliError::Solver)
}

/// Re-checks the residuals and objective recorded in a certificate.
pub fn revalidate(cert: &Certificate, pop: &PlanningPop) -> Result<(), String> {
    let Some(point) = &cert.point else {
        return Ok(());
    };
    let mut x = vec![0.0; pop.registry.len()];
    for (name, &v) in point {
        let id = pop
            .registry
            .get(name)
            .ok_or_else(|| format!("certificate names unknown variable `{name}`"))?;
        x[id.index()] = v;
    }
    if x.len() != point.len() {
        return Err("certificate point does not cover every variable".into());
    }
    let (eq, ineq) = pop.violation(&x);
    if cert.refined == Some(true) && (eq > REFINED_TOL || ineq > REFINED_TOL) {
        return Err(format!(
            "refined point violates the constraints (equality {eq:e}, inequality {ineq:e})"
        ));
    }
    if let Some(r) = cert.rho_ref {
        let f = pop.objective.eval(&x);
        if (f - r).abs() > 1e-9 * (1.0 + r.abs()) {
            return Err(format!("recorded reference objective {r} but the point gives {f}"));
        }
    }
    Ok(())
}

/// Exit status implied by an outcome: non-converged relaxations are solver failures.
pub fn check_status(out: &Outcome) -> Result<(), CliError> {
    match out.certificate.status {
        RelaxStatus::SlowProgress | RelaxStatus::IterationLimit => Err(CliError::Solver(format!(
            "relaxation solve stopped with status {:?}",
            out.certificate.status
        ))),
        _ => Ok(()),
    }
}

pub fn solver_log(out: &Outcome) -> String {
    let mut s = String::from("iter, mu, pres, dres, gap, step\n");
    if let Some(sol) = &out.solution {
        for l in &sol.log {
            s.push_str(&l.line());
            s.push('\n');
        }
    }
    s
}
