//! Builders translating inverse-kinematics and drone-landing specifications into quadratic
//! polynomial optimization problems with a Markov chain of cliques.

mod drone;
mod geometry;
mod ik;
mod pop;
pub mod spec;

pub use drone::{build_drone_pop, BodySpec, DroneSpec, DroneVars, InitialState, Obstacle, Weights};
pub use geometry::{rotation_rows, Pose};
pub use ik::{build_ik_pop, joint_limit_coefficients, IkSpec, IkVars, JointSpec, Terminal};
pub use pop::{clique_partition, ConstraintKind, PlanningPop};
pub use spec::{Problem, ProblemFile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanningError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("target pose is not in SE(3)")]
    TargetNotSe3,
    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),
    #[error("{kind} {index} is not supported by any clique")]
    Unsupported { kind: ConstraintKind, index: usize },
    #[error("running intersection property fails at clique {clique}")]
    RunningIntersection { clique: usize },
}
