//! JSON problem files (`"schema": "lpp-1"`).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::rotation_rows;
use super::{BodySpec, DroneSpec, IkSpec, PlanningError, PlanningPop};
use crate::poly::{text, Registry};

pub const SCHEMA: &str = "lpp-1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema: String,
    #[serde(flatten)]
    pub problem: Problem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    Ik(IkProblem),
    Drone(DroneSpec),
    Pop(PopSpec),
    Sim(SimSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkProblem {
    #[serde(flatten)]
    pub spec: IkSpec,
    /// Grid of target positions for batch feasibility maps; the target rotation is kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

/// Axis-aligned grid; each axis is `[min, max, count]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub z: [f64; 3],
}

impl Sweep {
    pub fn points(&self) -> Result<Vec<Vector3<f64>>, PlanningError> {
        let axis = |a: &[f64; 3]| -> Result<Vec<f64>, PlanningError> {
            let n = a[2];
            if !(n >= 1.0) || n.fract() != 0.0 {
                return Err(PlanningError::InvalidSpec("sweep counts must be positive integers".into()));
            }
            let n = n as usize;
            Ok((0..n)
                .map(|i| {
                    if n == 1 {
                        a[0]
                    } else {
                        a[0] + (a[1] - a[0]) * i as f64 / (n - 1) as f64
                    }
                })
                .collect())
        };
        let (xs, ys, zs) = (axis(&self.x)?, axis(&self.y)?, axis(&self.z)?);
        let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    out.push(Vector3::new(x, y, z));
                }
            }
        }
        Ok(out)
    }
}

/// Generic problem with polynomials in the text format over named variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopSpec {
    pub variables: Vec<String>,
    pub objective: String,
    #[serde(default)]
    pub equalities: Vec<String>,
    #[serde(default)]
    pub inequalities: Vec<String>,
    /// Cliques by variable name; omitted means a single clique over all variables.
    #[serde(default)]
    pub cliques: Option<Vec<Vec<String>>>,
}

impl PopSpec {
    pub fn build(&self) -> Result<PlanningPop, PlanningError> {
        let mut registry = Registry::new();
        for v in &self.variables {
            registry
                .add(v.clone())
                .map_err(|e| PlanningError::InvalidSpec(e.to_string()))?;
        }
        let parse = |s: &String| {
            text::parse_text(s, &registry).map_err(|e| PlanningError::InvalidSpec(e.to_string()))
        };
        let objective = parse(&self.objective)?;
        let equalities = self.equalities.iter().map(parse).collect::<Result<_, _>>()?;
        let inequalities = self.inequalities.iter().map(parse).collect::<Result<_, _>>()?;
        let cliques = match &self.cliques {
            None => vec![registry.ids().collect()],
            Some(cl) => cl
                .iter()
                .map(|c| {
                    let mut ids = c
                        .iter()
                        .map(|n| {
                            registry.get(n).ok_or_else(|| {
                                PlanningError::InvalidSpec(format!("unknown variable `{n}` in clique"))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    ids.sort_unstable();
                    Ok(ids)
                })
                .collect::<Result<_, PlanningError>>()?,
        };
        let layout = registry
            .ids()
            .map(|v| (registry.name(v).to_string(), vec![v]))
            .collect();
        Ok(PlanningPop {
            registry,
            objective,
            equalities,
            inequalities,
            cliques,
            layout,
            fixed: Default::default(),
        })
    }
}

/// Free rigid-body simulation comparing the variational integrator with explicit Euler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    #[serde(default = "no_gravity")]
    pub body: BodySpec,
    pub h: f64,
    pub steps: usize,
    /// Initial body angular velocity.
    pub omega: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default = "identity", with = "rotation_rows")]
    pub rotation: Matrix3<f64>,
    #[serde(default)]
    pub position: [f64; 3],
}

fn no_gravity() -> BodySpec {
    BodySpec {
        gravity: [0.0; 3],
        ..BodySpec::default()
    }
}

fn identity() -> Matrix3<f64> {
    Matrix3::identity()
}

impl ProblemFile {
    pub fn new(problem: Problem) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            problem,
        }
    }

    pub fn from_json(s: &str) -> Result<Self, PlanningError> {
        let f: ProblemFile =
            serde_json::from_str(s).map_err(|e| PlanningError::InvalidSpec(e.to_string()))?;
        if f.schema != SCHEMA {
            return Err(PlanningError::InvalidSpec(format!(
                "unsupported schema `{}` (expected `{SCHEMA}`)",
                f.schema
            )));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Builds the POP described by the file; simulation files have none.
    pub fn build_pop(&self) -> Result<PlanningPop, PlanningError> {
        match &self.problem {
            Problem::Ik(p) => super::build_ik_pop(&p.spec),
            Problem::Drone(d) => super::build_drone_pop(d),
            Problem::Pop(p) => p.build(),
            Problem::Sim(_) => Err(PlanningError::InvalidSpec(
                "simulation files do not define an optimization problem".into(),
            )),
        }
    }
}
