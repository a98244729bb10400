//! Block-diagonal semidefinite programs and their interior-point solver.

mod chol;
mod problem;
pub mod sdpa;
mod solver;

pub use chol::Envelope;
pub use problem::{BlockKind, BlockMat, BlockSpec, ConicSdp, Constraint, SparseSym};
pub use solver::{solve, IterLog, SdpSolution, SolveStatus, SolverOptions};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
}

/// Relative primal and dual infeasibility and relative duality gap of a candidate solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

pub fn residuals(sdp: &ConicSdp, x: &[BlockMat], y: &nalgebra::DVector<f64>, s: &[BlockMat]) -> Residuals {
    let b = nalgebra::DVector::from_column_slice(&sdp.b);
    let rp = (&b - sdp.apply(x)).norm() / (1.0 + b.norm());
    let c = sdp.objective_blocks();
    let aty = sdp.apply_adjoint(y);
    let mut rd = 0.0;
    let mut cn = 0.0;
    for ((ck, ak), sk) in c.iter().zip(&aty).zip(s) {
        let mut r = ck.clone();
        r.axpy(-1.0, ak);
        r.axpy(-1.0, sk);
        rd += r.norm_sq();
        cn += ck.norm_sq();
    }
    let pobj = sdp.primal_objective(x);
    let dobj = b.dot(y);
    Residuals {
        primal: rp,
        dual: rd.sqrt() / (1.0 + cn.sqrt()),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    }
}
