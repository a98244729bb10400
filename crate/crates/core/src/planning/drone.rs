use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::rotation_rows;
use super::{PlanningError, PlanningPop};
use crate::lie::{
    dynamics_polynomials, so3_polynomials, BodyInertia, ControlInput, DiscreteState,
    GravityRotation, InputVars, StepVars,
};
use crate::poly::{Polynomial, Registry, VarId};

/// Obstacle as a quadratic inequality on the position, `pᵀQp + lᵀp + c >= 0`, or the outside
/// of an infinite vertical cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Obstacle {
    Cylinder { center: [f64; 2], radius: f64 },
    Quadratic { q: [[f64; 3]; 3], l: [f64; 3], c: f64 },
}

impl Obstacle {
    pub fn polynomial(&self, p: &[VarId; 3]) -> Polynomial {
        let x: Vec<Polynomial> = p.iter().map(|&v| Polynomial::var(v)).collect();
        match self {
            Obstacle::Cylinder { center, radius } => {
                let dx = &x[0] - &Polynomial::constant(center[0]);
                let dy = &x[1] - &Polynomial::constant(center[1]);
                &(&(&dx * &dx) + &(&dy * &dy)) - &Polynomial::constant(radius * radius)
            }
            Obstacle::Quadratic { q, l, c } => {
                let mut out = Polynomial::constant(*c);
                for i in 0..3 {
                    out += &x[i].scale(l[i]);
                    for j in 0..3 {
                        out += &(&x[i] * &x[j]).scale(q[i][j]);
                    }
                }
                out
            }
        }
    }

    pub fn value(&self, p: &Vector3<f64>) -> f64 {
        let ids = [VarId(0), VarId(1), VarId(2)];
        self.polynomial(&ids).eval(p.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub mass: f64,
    pub inertia: [f64; 3],
    pub gravity: [f64; 3],
}

impl Default for BodySpec {
    fn default() -> Self {
        Self {
            mass: 0.5,
            inertia: [0.3, 0.2, 0.3],
            gravity: [0.0, 0.0, -9.81],
        }
    }
}

impl BodySpec {
    pub fn body(&self) -> Result<BodyInertia, PlanningError> {
        BodyInertia::new(
            self.mass,
            Matrix3::from_diagonal(&Vector3::from(self.inertia)),
            Vector3::from(self.gravity),
        )
        .map_err(|e| PlanningError::InvalidSpec(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    #[serde(with = "rotation_rows")]
    pub rotation: Matrix3<f64>,
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default = "identity", with = "rotation_rows")]
    pub pose_change: Matrix3<f64>,
}

fn identity() -> Matrix3<f64> {
    Matrix3::identity()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Terminal weights on `‖R−I‖², ‖F−I‖², ‖p‖², ‖v‖²`.
    pub terminal: [f64; 4],
    /// Stage weights on the same four terms.
    pub stage: [f64; 4],
    /// Stage weights on `‖τ‖²` and `(f^z)²`.
    pub input: [f64; 2],
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            terminal: [100.0, 10.0, 100.0, 100.0],
            stage: [0.1, 10.0, 0.1, 1.0],
            input: [0.1, 0.1],
        }
    }
}

fn default_tau() -> [Option<f64>; 2] {
    [Some(-5.0), Some(5.0)]
}

fn default_height() -> Option<f64> {
    Some(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroneSpec {
    pub horizon: usize,
    pub h: f64,
    #[serde(default)]
    pub body: BodySpec,
    pub initial: InitialState,
    /// Per-component torque bounds; `null` means unbounded.
    #[serde(default = "default_tau")]
    pub tau_bounds: [Option<f64>; 2],
    #[serde(default)]
    pub fz_bounds: [Option<f64>; 2],
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    /// Lower bound on the height `z`; `null` disables it.
    #[serde(default = "default_height")]
    pub min_height: Option<f64>,
    #[serde(default)]
    pub weights: Weights,
    /// Optional ball `‖x_clique‖² <= r²` added to every clique.
    #[serde(default)]
    pub ball_radius: Option<f64>,
    #[serde(default)]
    pub gravity_rotation: GravityRotation,
}

impl DroneSpec {
    /// Landing task with the reference parameters and initial pitch `theta` (radians).
    pub fn landing(horizon: usize, h: f64, theta: f64) -> Self {
        Self {
            horizon,
            h,
            body: BodySpec::default(),
            initial: InitialState {
                rotation: crate::lie::so3::rot_y(theta),
                position: [1.0, 1.0, 3.0],
                velocity: [0.0; 3],
                pose_change: Matrix3::identity(),
            },
            tau_bounds: default_tau(),
            fz_bounds: [None, None],
            obstacles: vec![],
            min_height: Some(0.0),
            weights: Weights::default(),
            ball_radius: None,
            gravity_rotation: GravityRotation::Transpose,
        }
    }

    pub fn validate(&self) -> Result<BodyInertia, PlanningError> {
        if self.horizon == 0 {
            return Err(PlanningError::InvalidSpec("horizon must be at least 1".into()));
        }
        if !(self.h > 0.0) {
            return Err(PlanningError::InvalidSpec("step h must be positive".into()));
        }
        for (name, [lo, hi]) in [("tau", self.tau_bounds), ("fz", self.fz_bounds)] {
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if lo > hi {
                    return Err(PlanningError::InfeasibleBounds(format!(
                        "{name} bounds [{lo}, {hi}] have min > max"
                    )));
                }
            }
        }
        for m in [&self.initial.rotation, &self.initial.pose_change] {
            crate::lie::so3::check_rotation(m)
                .map_err(|e| PlanningError::InvalidSpec(format!("initial state: {e}")))?;
        }
        self.body.body()
    }

    pub fn initial_state(&self) -> DiscreteState {
        DiscreteState {
            r: self.initial.rotation,
            p: Vector3::from(self.initial.position),
            f: self.initial.pose_change,
            v: Vector3::from(self.initial.velocity),
        }
    }
}

/// Variable handles of a drone problem; `steps[0]` is the fixed initial state and
/// `inputs[k]` drives the transition from step `k` to `k+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DroneVars {
    pub steps: Vec<StepVars>,
    pub inputs: Vec<InputVars>,
}

fn arr<const N: usize>(v: &[VarId]) -> [VarId; N] {
    v.try_into().expect("block size")
}

impl DroneVars {
    pub fn from_pop(pop: &PlanningPop) -> Option<DroneVars> {
        let mut steps = Vec::new();
        let mut inputs = Vec::new();
        for k in 0.. {
            let Some(r) = pop.layout.get(&format!("R{k}")) else { break };
            let f = pop.layout.get(&format!("F{k}"))?;
            steps.push(StepVars {
                r: arr(r),
                p: arr(pop.layout.get(&format!("p{k}"))?),
                f: arr(f),
                v: arr(pop.layout.get(&format!("v{k}"))?),
            });
            if k > 0 {
                inputs.push(InputVars {
                    tau: arr(pop.layout.get(&format!("tau{k}"))?),
                    fz: pop.layout.get(&format!("fz{k}"))?[0],
                });
            }
        }
        if steps.is_empty() {
            None
        } else {
            Some(DroneVars { steps, inputs })
        }
    }

    pub fn state(&self, k: usize, x: &[f64]) -> DiscreteState {
        let s = &self.steps[k];
        let g = |v: &VarId| x[v.index()];
        DiscreteState {
            r: Matrix3::from_iterator(s.r.iter().map(g)),
            p: Vector3::from_iterator(s.p.iter().map(g)),
            f: Matrix3::from_iterator(s.f.iter().map(g)),
            v: Vector3::from_iterator(s.v.iter().map(g)),
        }
    }

    /// Input applied between step `k` and `k+1` (k from 0).
    pub fn input(&self, k: usize, x: &[f64]) -> ControlInput {
        let u = &self.inputs[k];
        ControlInput {
            tau: Vector3::from_iterator(u.tau.iter().map(|v| x[v.index()])),
            fz: x[u.fz.index()],
        }
    }

    /// Dense point of a state trajectory and the inputs that produced it.
    pub fn assignment(&self, traj: &[DiscreteState], inputs: &[ControlInput], nvars: usize) -> Vec<f64> {
        let mut x = vec![0.0; nvars];
        for (s, d) in self.steps.iter().zip(traj) {
            for j in 0..3 {
                for i in 0..3 {
                    x[s.r[3 * j + i].index()] = d.r[(i, j)];
                    x[s.f[3 * j + i].index()] = d.f[(i, j)];
                }
                x[s.p[j].index()] = d.p[j];
                x[s.v[j].index()] = d.v[j];
            }
        }
        for (u, c) in self.inputs.iter().zip(inputs) {
            for i in 0..3 {
                x[u.tau[i].index()] = c.tau[i];
            }
            x[u.fz.index()] = c.fz;
        }
        x
    }
}

fn frob_sq_minus_identity(ids: &[VarId; 9]) -> Polynomial {
    let mut out = Polynomial::zero();
    for (i, v) in ids.iter().enumerate() {
        let target = if i % 4 == 0 { 1.0 } else { 0.0 };
        let d = Polynomial::affine(&[(*v, 1.0)], -target);
        out += &(&d * &d);
    }
    out
}

fn norm_sq(ids: &[VarId]) -> Polynomial {
    let mut out = Polynomial::zero();
    for v in ids {
        out += &(&Polynomial::var(*v) * &Polynomial::var(*v));
    }
    out
}

fn state_cost(s: &StepVars, w: &[f64; 4]) -> Polynomial {
    let mut out = frob_sq_minus_identity(&s.r).scale(w[0]);
    out += &frob_sq_minus_identity(&s.f).scale(w[1]);
    out += &norm_sq(&s.p).scale(w[2]);
    out += &norm_sq(&s.v).scale(w[3]);
    out
}

/// Builds the drone landing problem over `horizon` LGVI steps.
pub fn build_drone_pop(spec: &DroneSpec) -> Result<PlanningPop, PlanningError> {
    let body = spec.validate()?;
    let n = spec.horizon;
    let mut registry = Registry::new();
    let mut layout = BTreeMap::new();
    let mut steps = Vec::with_capacity(n + 1);
    let mut inputs = Vec::with_capacity(n);
    for k in 0..=n {
        let s = StepVars {
            r: arr(&registry.add_block(&format!("R{k}"), 9).unwrap()),
            f: arr(&registry.add_block(&format!("F{k}"), 9).unwrap()),
            p: arr(&registry.add_block(&format!("p{k}"), 3).unwrap()),
            v: arr(&registry.add_block(&format!("v{k}"), 3).unwrap()),
        };
        layout.insert(format!("R{k}"), s.r.to_vec());
        layout.insert(format!("F{k}"), s.f.to_vec());
        layout.insert(format!("p{k}"), s.p.to_vec());
        layout.insert(format!("v{k}"), s.v.to_vec());
        steps.push(s);
        if k > 0 {
            let u = InputVars {
                tau: arr(&registry.add_block(&format!("tau{k}"), 3).unwrap()),
                fz: registry.add(format!("fz{k}")).unwrap(),
            };
            layout.insert(format!("tau{k}"), u.tau.to_vec());
            layout.insert(format!("fz{k}"), vec![u.fz]);
            inputs.push(u);
        }
    }
    let vars = DroneVars {
        steps: steps.clone(),
        inputs: inputs.clone(),
    };
    let fixed: BTreeMap<VarId, f64> = {
        let x = vars.assignment(&[spec.initial_state()], &[], registry.len());
        let s0 = &steps[0];
        s0.r.iter()
            .chain(&s0.f)
            .chain(&s0.p)
            .chain(&s0.v)
            .map(|v| (*v, x[v.index()]))
            .collect()
    };
    let subst: HashMap<VarId, Polynomial> = fixed
        .iter()
        .map(|(&v, &x)| (v, Polynomial::constant(x)))
        .collect();

    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    let mut objective = Polynomial::zero();
    let w = &spec.weights;
    for k in 0..n {
        let (prev, next, u) = (&steps[k], &steps[k + 1], &inputs[k]);
        equalities.extend(dynamics_polynomials(prev, next, u, &body, spec.h, spec.gravity_rotation));
        equalities.extend(so3_polynomials(&next.r).expect("distinct ids"));
        equalities.extend(so3_polynomials(&next.f).expect("distinct ids"));
        for &t in &u.tau {
            if let Some(lo) = spec.tau_bounds[0] {
                inequalities.push(Polynomial::affine(&[(t, 1.0)], -lo));
            }
            if let Some(hi) = spec.tau_bounds[1] {
                inequalities.push(Polynomial::affine(&[(t, -1.0)], hi));
            }
        }
        if let Some(lo) = spec.fz_bounds[0] {
            inequalities.push(Polynomial::affine(&[(u.fz, 1.0)], -lo));
        }
        if let Some(hi) = spec.fz_bounds[1] {
            inequalities.push(Polynomial::affine(&[(u.fz, -1.0)], hi));
        }
        for ob in &spec.obstacles {
            inequalities.push(ob.polynomial(&next.p));
        }
        if let Some(zmin) = spec.min_height {
            inequalities.push(Polynomial::affine(&[(next.p[2], 1.0)], -zmin));
        }
        objective += &state_cost(prev, &w.stage);
        objective += &norm_sq(&u.tau).scale(w.input[0]);
        objective += &norm_sq(&[u.fz]).scale(w.input[1]);
    }
    objective += &state_cost(&steps[n], &w.terminal);

    let cliques: Vec<Vec<VarId>> = (0..n)
        .map(|k| {
            let (a, b, u) = (&steps[k], &steps[k + 1], &inputs[k]);
            let mut cl: Vec<VarId> = a
                .r
                .iter()
                .chain(&a.f)
                .chain(&a.p)
                .chain(&a.v)
                .chain(&b.r)
                .chain(&b.f)
                .chain(&b.p)
                .chain(&b.v)
                .chain(&u.tau)
                .copied()
                .collect();
            cl.push(u.fz);
            cl.retain(|v| !fixed.contains_key(v));
            cl.sort_unstable();
            cl
        })
        .collect();
    if let Some(r) = spec.ball_radius {
        for cl in &cliques {
            inequalities.push(&Polynomial::constant(r * r) - &norm_sq(cl));
        }
    }

    let objective = objective.substitute(&subst);
    let equalities = equalities
        .into_iter()
        .map(|p| p.substitute(&subst))
        .filter(|p| !p.is_zero())
        .collect();
    let inequalities = inequalities.into_iter().map(|p| p.substitute(&subst)).collect();
    Ok(PlanningPop {
        registry,
        objective,
        equalities,
        inequalities,
        cliques,
        layout,
        fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{lgvi_rollout, LgviOptions};
    use crate::planning::clique_partition;

    #[test]
    fn obstacle_values() {
        let ob = Obstacle::Cylinder {
            center: [0.0, 0.5],
            radius: 0.5,
        };
        assert!((ob.value(&Vector3::new(0.0, 0.5, 2.0)) + 0.25).abs() < 1e-15);
        assert!((ob.value(&Vector3::new(1.0, 1.0, 3.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn structure_and_weights() {
        let spec = DroneSpec::landing(2, 0.25, 0.0);
        let pop = build_drone_pop(&spec).unwrap();
        assert_eq!(pop.registry.len(), 24 + 28 * 2);
        assert_eq!(pop.cliques.len(), 2);
        assert!(pop.max_degree() <= 2);
        clique_partition(&pop).unwrap();
        let vars = DroneVars::from_pop(&pop).unwrap();
        // terminal weight on ‖p_N‖² and stage weight on ‖v_1‖²
        let m = |v: VarId| crate::poly::Monomial::from_powers([(v, 2)]);
        assert_eq!(pop.objective.coefficient(&m(vars.steps[2].p[0])), 100.0);
        assert_eq!(pop.objective.coefficient(&m(vars.steps[1].v[0])), 1.0);
        assert_eq!(pop.objective.coefficient(&m(vars.inputs[1].fz)), 0.1);
        assert_eq!(pop.objective.coefficient(&m(vars.steps[2].f[4])), 10.0);
    }

    #[test]
    fn rollout_satisfies_equalities() {
        let spec = DroneSpec::landing(4, 0.25, 1.0);
        let pop = build_drone_pop(&spec).unwrap();
        let vars = DroneVars::from_pop(&pop).unwrap();
        let body = spec.body.body().unwrap();
        let inputs: Vec<ControlInput> = (0..4)
            .map(|k| ControlInput {
                tau: Vector3::new(0.1, -0.2 * k as f64, 0.05),
                fz: 4.9 - 0.3 * k as f64,
            })
            .collect();
        let traj = lgvi_rollout(&spec.initial_state(), &inputs, &body, spec.h, &LgviOptions::default()).unwrap();
        let x = vars.assignment(&traj, &inputs, pop.registry.len());
        let (eq, _) = pop.violation(&x);
        assert!(eq <= 1e-10, "{eq:e}");
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut spec = DroneSpec::landing(2, 0.25, 0.0);
        spec.tau_bounds = [Some(5.0), Some(-5.0)];
        assert!(matches!(build_drone_pop(&spec), Err(PlanningError::InfeasibleBounds(_))));
    }
}
