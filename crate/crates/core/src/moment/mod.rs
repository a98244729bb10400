//! Moment relaxations of polynomial optimization problems, dense or with correlative sparsity.

mod eliminate;
mod index;
mod presolve;
mod relax;

pub use eliminate::{eliminate, eliminate_grouped, to_conic, BlockSlot, Elimination, MomentProgram};
pub use index::{lift_functional, MomentIndex};
pub use presolve::{presolve, Presolved};
pub use relax::{
    assemble_moment_matrix, dense_relaxation, relax, relaxation_order, sparse_relaxation,
    symbolic_text, BlockEntry, BlockRole, LinearRow, MomentBlock, MomentSdp, RelaxOptions,
    Relaxation, Sparsity,
};

use thiserror::Error;

use crate::planning::PlanningError;
use crate::poly::Monomial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("relaxation order {order} is below the minimum {needed}")]
    Order { order: u32, needed: u32 },
    #[error("monomial of degree {degree} exceeds the relaxation degree {max}")]
    DegreeTooHigh { degree: u32, max: u32 },
    #[error("monomial {0:?} is not supported by any clique")]
    NotInClique(Monomial),
    #[error("relaxation too large: {0}")]
    TooLarge(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Planning(#[from] PlanningError),
}
