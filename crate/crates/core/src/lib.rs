//! Moment-SOS relaxations of rigid-body motion planning problems on matrix Lie groups.
//!
//! Planning problems (inverse kinematics of serial chains, drone trajectories) are written as
//! quadratic polynomial optimization problems, relaxed with the Lasserre moment hierarchy,
//! solved with a homogeneous self-dual interior-point method and certified by rank and
//! suboptimality checks.

pub mod certify;
pub mod lie;
pub mod moment;
pub mod planning;
pub mod pipeline;
pub mod poly;
pub mod sdp;
pub mod sim;

pub use poly::{monomial_basis, Basis, Monomial, PolyError, Polynomial, Registry, VarId};
