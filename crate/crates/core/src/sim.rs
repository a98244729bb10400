//! Torque-free simulation comparing the variational integrator with explicit Euler.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::lie::{
    continuous_energy, discrete_energy, euler_step, lgvi_rollout, ContinuousState, ControlInput,
    DiscreteState, LgviOptions, LieError,
};
use crate::planning::spec::SimSpec;
use crate::planning::PlanningError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Spec(#[from] PlanningError),
    #[error(transparent)]
    Integrator(#[from] LieError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub lgvi: Vec<DiscreteState>,
    pub lgvi_energy: Vec<f64>,
    pub euler_energy: Vec<f64>,
    pub summary: SimSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub steps: usize,
    pub h: f64,
    pub initial_energy: f64,
    /// `max_k |E_k − E_0| / |E_0|`, or the absolute deviation when `E_0 = 0`.
    pub lgvi_drift: f64,
    pub euler_drift: f64,
}

pub fn max_drift(energy: &[f64]) -> f64 {
    let Some(&e0) = energy.first() else { return 0.0 };
    let dev = energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    if e0 == 0.0 {
        dev
    } else {
        dev / e0.abs()
    }
}

/// Integrates the body of `spec` for `spec.steps` steps with both integrators.
pub fn simulate(spec: &SimSpec) -> Result<SimRun, SimError> {
    if !(spec.h > 0.0 && spec.h.is_finite()) {
        return Err(PlanningError::InvalidSpec("step h must be positive".into()).into());
    }
    crate::lie::so3::check_rotation(&spec.rotation)
        .map_err(|e| PlanningError::InvalidSpec(format!("initial rotation: {e}")))?;
    let body = spec.body.body()?;
    let opts = LgviOptions::default();
    let omega = Vector3::from(spec.omega);
    let v = Vector3::from(spec.velocity);
    let p = Vector3::from(spec.position);
    let x0 = DiscreteState::from_twist(spec.rotation, p, &omega, v, &body, spec.h, &opts)?;
    let lgvi = lgvi_rollout(&x0, &vec![ControlInput::default(); spec.steps], &body, spec.h, &opts)?;
    let lgvi_energy: Vec<f64> = lgvi.iter().map(|s| discrete_energy(s, &body, spec.h)).collect();

    let mut c = ContinuousState {
        r: spec.rotation,
        p,
        omega,
        v,
    };
    let mut euler_energy = Vec::with_capacity(spec.steps + 1);
    euler_energy.push(continuous_energy(&c, &body));
    for _ in 0..spec.steps {
        c = euler_step(&c, &body, spec.h);
        euler_energy.push(continuous_energy(&c, &body));
    }

    let summary = SimSummary {
        steps: spec.steps,
        h: spec.h,
        initial_energy: lgvi_energy[0],
        lgvi_drift: max_drift(&lgvi_energy),
        euler_drift: max_drift(&euler_energy),
    };
    Ok(SimRun {
        lgvi,
        lgvi_energy,
        euler_energy,
        summary,
    })
}
