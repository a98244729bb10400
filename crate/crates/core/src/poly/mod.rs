//! Sparse multivariate polynomials over a variable registry and graded monomial bases.

mod basis;
mod monomial;
mod polynomial;
mod registry;
pub mod text;

pub use basis::{binomial, monomial_basis, Basis};
pub use monomial::{Monomial, VarId};
pub use polynomial::{ArithOp, Polynomial};
pub use registry::Registry;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("variable name is empty")]
    EmptyName,
    #[error("variable name `{0}` contains a reserved character")]
    BadName(String),
    #[error("variable name `{0}` already registered")]
    DuplicateName(String),
    #[error("variable {0} does not belong to this registry")]
    ForeignVariable(VarId),
    #[error("no value assigned to variable {0}")]
    MissingAssignment(VarId),
    #[error("parse error: {0}")]
    Parse(String),
}
