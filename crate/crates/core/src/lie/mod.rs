//! SO(3)/SE(3) numerics: hat and vee maps, the Lie group variational integrator, an explicit
//! Euler baseline, energy diagnostics and symbolic constraint generators.

mod body;
mod constraints;
mod integrator;
pub mod so3;
pub mod trajectory;

pub use body::{kinetic_energy, nonstandard_inertia, BodyInertia};
pub use constraints::{
    dynamics_polynomials, so3_polynomials, InputVars, PolyMat3, PolyVec3, StepVars,
};
pub use integrator::{
    continuous_energy, discrete_energy, discrete_twist, euler_step, lgvi_rollout, lgvi_step,
    solve_pose_change, ContinuousState, ControlInput, DiscreteState, GravityRotation, LgviOptions,
};
pub use so3::{hat, vee};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("matrix is not skew-symmetric (|S + Sᵀ| = {0:e})")]
    NotSkew(f64),
    #[error("inertia matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("inertia matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("matrix is not a rotation (‖RᵀR − I‖ = {0:e})")]
    NotRotation(f64),
    #[error("implicit pose-change solve did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("variable block repeats a variable")]
    DuplicateVariables,
}
