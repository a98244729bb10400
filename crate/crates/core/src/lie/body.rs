use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::LieError;

/// Mass properties of a rigid body together with the gravity vector acting on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyInertia {
    pub mass: f64,
    /// Standard moment of inertia `I_b`.
    pub inertia: Matrix3<f64>,
    /// Nonstandard inertia `I^b`, with `I_b = tr(I^b)·I − I^b`.
    pub inertia_ns: Matrix3<f64>,
    pub gravity: Vector3<f64>,
}

/// `I^b = (tr(I_b)/2)·I − I_b`.
pub fn nonstandard_inertia(ib: &Matrix3<f64>) -> Result<Matrix3<f64>, LieError> {
    let asym = (ib - ib.transpose()).abs().max();
    if asym > 1e-12 * ib.abs().max().max(1.0) {
        return Err(LieError::NotSymmetric(asym));
    }
    Ok(Matrix3::identity() * (ib.trace() / 2.0) - ib)
}

impl BodyInertia {
    pub fn new(mass: f64, inertia: Matrix3<f64>, gravity: Vector3<f64>) -> Result<Self, LieError> {
        if !(mass > 0.0) {
            return Err(LieError::NonPositiveMass(mass));
        }
        let inertia_ns = nonstandard_inertia(&inertia)?;
        if inertia.symmetric_eigenvalues().min() <= 0.0 {
            return Err(LieError::NotPositiveDefinite);
        }
        Ok(Self {
            mass,
            inertia,
            inertia_ns,
            gravity,
        })
    }

    /// Quadrotor parameters used throughout the drone examples: `m = 0.5`,
    /// `I_b = diag(0.3, 0.2, 0.3)`, `g = (0, 0, −9.81)`.
    pub fn quadrotor() -> Self {
        Self::new(
            0.5,
            Matrix3::from_diagonal(&Vector3::new(0.3, 0.2, 0.3)),
            Vector3::new(0.0, 0.0, -9.81),
        )
        .expect("valid constants")
    }

    pub fn without_gravity(mut self) -> Self {
        self.gravity = Vector3::zeros();
        self
    }
}

/// `½ ξᵀ J_b ξ` for the body twist `ξ = (ω, v)`.
pub fn kinetic_energy(twist: &Vector6<f64>, body: &BodyInertia) -> f64 {
    let w = twist.fixed_rows::<3>(0);
    let v = twist.fixed_rows::<3>(3);
    0.5 * (w.dot(&(body.inertia * w)) + body.mass * v.norm_squared())
}
