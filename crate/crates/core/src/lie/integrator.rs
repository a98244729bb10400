use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::so3::{check_rotation, exp, hat, vee_unchecked};
use super::{kinetic_energy, BodyInertia, LieError};

/// Per-step state of the discrete rigid body: orientation, position, pose change
/// `F_k = R_kᵀR_{k+1}` and body-frame velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteState {
    pub r: Matrix3<f64>,
    pub p: Vector3<f64>,
    pub f: Matrix3<f64>,
    pub v: Vector3<f64>,
}

/// Pose and body twist of the continuous-time body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousState {
    pub r: Matrix3<f64>,
    pub p: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub v: Vector3<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub tau: Vector3<f64>,
    pub fz: f64,
}

/// Frame of the gravity term in the velocity update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GravityRotation {
    /// `R_{k+1}ᵀ g`: gravity expressed in the body frame.
    #[default]
    Transpose,
    /// `R_{k+1} g`.
    AsPrinted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LgviOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub gravity_rotation: GravityRotation,
}

impl Default for LgviOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            gravity_rotation: GravityRotation::Transpose,
        }
    }
}

impl DiscreteState {
    pub fn identity() -> Self {
        Self {
            r: Matrix3::identity(),
            p: Vector3::zeros(),
            f: Matrix3::identity(),
            v: Vector3::zeros(),
        }
    }

    /// Discrete state whose pose change carries the angular momentum `I_b ω` at `t = 0`.
    pub fn from_twist(
        r: Matrix3<f64>,
        p: Vector3<f64>,
        omega: &Vector3<f64>,
        v: Vector3<f64>,
        body: &BodyInertia,
        h: f64,
        opts: &LgviOptions,
    ) -> Result<Self, LieError> {
        let rhs = -hat(&(body.inertia * omega)) * h;
        let f = solve_pose_change(&rhs, &exp(&(omega * h)), &body.inertia_ns, opts)?;
        Ok(Self { r, p, f, v })
    }

    pub fn validate(&self) -> Result<(), LieError> {
        check_rotation(&self.r)?;
        check_rotation(&self.f)
    }
}

/// Solves `I^b Fᵀ − F I^b = rhs` for `F ∈ SO(3)` by Newton's method with the right
/// perturbation `F ← F·exp(hat(w))`. `rhs` must be skew.
pub fn solve_pose_change(
    rhs: &Matrix3<f64>,
    guess: &Matrix3<f64>,
    ins: &Matrix3<f64>,
    opts: &LgviOptions,
) -> Result<Matrix3<f64>, LieError> {
    let residual = |f: &Matrix3<f64>| vee_unchecked(&(ins * f.transpose() - f * ins - rhs));
    let newton = |f: &Matrix3<f64>, r: &Vector3<f64>| {
        let mut jac = Matrix3::zeros();
        for i in 0..3 {
            let e = hat(&Vector3::ith(i, 1.0));
            let col = vee_unchecked(&(-(ins * e * f.transpose()) - f * e * ins));
            jac.set_column(i, &col);
        }
        jac.lu().solve(&(-r)).map(|step| f * exp(&step))
    };
    let mut f = *guess;
    let mut res = f64::INFINITY;
    for _ in 0..=opts.max_iter {
        let r = residual(&f);
        res = r.amax();
        if res <= opts.tol {
            // one polishing step: stopping right at `tol` leaves a per-step bias in the energy
            if let Some(g) = newton(&f, &r) {
                if residual(&g).amax() < res {
                    return Ok(g);
                }
            }
            return Ok(f);
        }
        f = newton(&f, &r).ok_or(LieError::NewtonDiverged {
            iterations: opts.max_iter,
            residual: res,
        })?;
    }
    Err(LieError::NewtonDiverged {
        iterations: opts.max_iter,
        residual: res,
    })
}

/// One step of the forced Lie group variational integrator.
pub fn lgvi_step(
    state: &DiscreteState,
    u: &ControlInput,
    body: &BodyInertia,
    h: f64,
    opts: &LgviOptions,
) -> Result<DiscreteState, LieError> {
    if !(h > 0.0) {
        return Err(LieError::NonPositiveStep(h));
    }
    let ins = &body.inertia_ns;
    let fk = &state.f;
    let r_next = state.r * fk;
    let p_next = state.p + state.r * state.v * h;
    let rhs = fk.transpose() * ins - ins * fk + hat(&u.tau) * (h * h);
    let f_next = solve_pose_change(&rhs, fk, ins, opts)?;
    let g = match opts.gravity_rotation {
        GravityRotation::Transpose => r_next.transpose() * body.gravity,
        GravityRotation::AsPrinted => r_next * body.gravity,
    };
    let v_next = fk.transpose() * state.v + (Vector3::z() * (u.fz / body.mass) + g) * h;
    Ok(DiscreteState {
        r: r_next,
        p: p_next,
        f: f_next,
        v: v_next,
    })
}

/// Rolls out `inputs.len()` LGVI steps; the returned trajectory includes the initial state.
pub fn lgvi_rollout(
    x0: &DiscreteState,
    inputs: &[ControlInput],
    body: &BodyInertia,
    h: f64,
    opts: &LgviOptions,
) -> Result<Vec<DiscreteState>, LieError> {
    let mut traj = Vec::with_capacity(inputs.len() + 1);
    traj.push(x0.clone());
    for u in inputs {
        let next = lgvi_step(traj.last().unwrap(), u, body, h, opts)?;
        traj.push(next);
    }
    Ok(traj)
}

/// One explicit Euler step of the Euler-Poincaré equations and the reconstruction
/// equation. The rotation is not re-orthonormalized.
pub fn euler_step(state: &ContinuousState, body: &BodyInertia, h: f64) -> ContinuousState {
    let w = state.omega;
    let ib = &body.inertia;
    let wdot = -ib.lu().solve(&w.cross(&(ib * w))).unwrap_or_else(Vector3::zeros);
    let vdot = -w.cross(&state.v) + state.r.transpose() * body.gravity;
    ContinuousState {
        r: state.r + state.r * hat(&w) * h,
        p: state.p + state.r * state.v * h,
        omega: w + wdot * h,
        v: state.v + vdot * h,
    }
}

/// Body twist `(ω, v)` read from a discrete state, with `ω = vee((F − Fᵀ)/(2h))`.
pub fn discrete_twist(state: &DiscreteState, h: f64) -> Vector6<f64> {
    let w = vee_unchecked(&state.f) / h;
    Vector6::new(w.x, w.y, w.z, state.v.x, state.v.y, state.v.z)
}

/// Kinetic plus gravitational potential energy of a discrete state.
pub fn discrete_energy(state: &DiscreteState, body: &BodyInertia, h: f64) -> f64 {
    kinetic_energy(&discrete_twist(state, h), body) - body.mass * body.gravity.dot(&state.p)
}

pub fn continuous_energy(state: &ContinuousState, body: &BodyInertia) -> f64 {
    let t = Vector6::new(
        state.omega.x,
        state.omega.y,
        state.omega.z,
        state.v.x,
        state.v.y,
        state.v.z,
    );
    kinetic_energy(&t, body) - body.mass * body.gravity.dot(&state.p)
}
