//! Rank checks, solution extraction, suboptimality and local refinement.

mod refine;

pub use refine::{refine_local, RefineOptions, Refined};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::moment::{assemble_moment_matrix, MomentIndex, Presolved};
use crate::poly::VarId;

pub const DELTA_TOL: f64 = 1e-3;
pub const RANK_CUTOFF: f64 = 1e-6;
pub const INFEASIBILITY_THRESHOLD: f64 = 1000.0;

/// `|λ₂| / |λ₁|` with eigenvalues sorted by magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRatio {
    pub delta: f64,
    /// Set when the matrix is zero and `delta` is the uninformative value 1.
    pub degenerate: bool,
}

fn sorted_magnitudes(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn rank_ratio(m: &DMatrix<f64>) -> RankRatio {
    let ev = sorted_magnitudes(m);
    match ev.first() {
        Some(&l1) if l1 > 0.0 => RankRatio {
            delta: ev.get(1).map_or(0.0, |l2| l2 / l1),
            degenerate: false,
        },
        _ => RankRatio {
            delta: 1.0,
            degenerate: true,
        },
    }
}

/// Number of eigenvalues above `cutoff · |λ₁|`.
pub fn numerical_rank(m: &DMatrix<f64>, cutoff: f64) -> usize {
    let ev = sorted_magnitudes(m);
    let Some(&l1) = ev.first() else { return 0 };
    if l1 == 0.0 {
        return 0;
    }
    ev.iter().filter(|&&l| l > cutoff * l1).count()
}

/// Rank data of one clique's moment matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliqueRank {
    pub delta: f64,
    pub degenerate: bool,
    pub rank: usize,
    /// Rank of the leading block `M_{κ−1}`.
    pub rank_lower: usize,
}

pub fn clique_ranks(y: &[f64], idx: &MomentIndex, cutoff: f64) -> Vec<CliqueRank> {
    (0..idx.cliques().len())
        .map(|k| {
            let m = assemble_moment_matrix(y, k, idx);
            let r = rank_ratio(&m);
            let nvars = idx.cliques()[k].len();
            let lower = crate::poly::binomial((nvars as u32 + idx.order() - 1) as u64, (idx.order() - 1) as u64) as usize;
            let sub = m.view((0, 0), (lower, lower)).into_owned();
            CliqueRank {
                delta: r.delta,
                degenerate: r.degenerate,
                rank: numerical_rank(&m, cutoff),
                rank_lower: numerical_rank(&sub, cutoff),
            }
        })
        .collect()
}

/// Reads the first-order moments as a candidate minimizer when every clique passes the rank
/// ratio test. Returns the dense point over the original registry.
pub fn extract_point(
    y: &[f64],
    idx: &MomentIndex,
    presolved: &Presolved,
    deltas: &[f64],
    tol: f64,
) -> Result<Vec<f64>, f64> {
    let worst = deltas.iter().copied().fold(0.0, f64::max);
    if worst > tol {
        return Err(worst);
    }
    let values: BTreeMap<VarId, f64> = presolved
        .alive()
        .into_iter()
        .map(|v| (v, y[idx.first_order(v).expect("alive variable has a moment")] / y[0]))
        .collect();
    Ok(presolved.reconstruct(&values))
}

/// `ε = (ρ_ref − ρ_sdp)/ρ_ref`, or the absolute gap when `ρ_ref = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Suboptimality {
    Relative(f64),
    Absolute(f64),
}

impl Suboptimality {
    pub fn value(self) -> f64 {
        match self {
            Suboptimality::Relative(v) | Suboptimality::Absolute(v) => v,
        }
    }
}

pub fn suboptimality(rho_sdp: f64, rho_ref: f64) -> Suboptimality {
    if rho_ref == 0.0 {
        Suboptimality::Absolute(rho_ref - rho_sdp)
    } else {
        Suboptimality::Relative((rho_ref - rho_sdp) / rho_ref)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Infeasible,
    Undecided,
}

/// Outcome of solving a relaxation, as seen by the feasibility classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxStatus {
    Optimal,
    /// Solver stopped within a small factor of its tolerances.
    NearOptimal,
    /// Certified empty: Farkas ray of the SDP, or a contradiction found by presolve or by the
    /// moment equalities.
    Infeasible,
    /// Relaxation value unbounded below.
    Unbounded,
    SlowProgress,
    IterationLimit,
}

pub fn classify_feasibility(status: RelaxStatus, rho_sdp: f64, threshold: f64) -> Feasibility {
    if status == RelaxStatus::Infeasible || rho_sdp > threshold {
        return Feasibility::Infeasible;
    }
    match status {
        RelaxStatus::SlowProgress | RelaxStatus::IterationLimit => Feasibility::Undecided,
        _ => Feasibility::Feasible,
    }
}

/// Structured record of one certified solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub status: RelaxStatus,
    pub rho_sdp: Option<f64>,
    pub rho_ref: Option<f64>,
    pub epsilon: Option<Suboptimality>,
    pub delta: Option<f64>,
    pub delta_per_clique: Vec<f64>,
    pub rank_per_clique: Vec<usize>,
    pub rank_condition: Option<bool>,
    /// Candidate optimizer count when the rank condition holds.
    pub optimizers: Option<usize>,
    pub point: Option<BTreeMap<String, f64>>,
    pub feasibility: Feasibility,
    pub refined: Option<bool>,
    pub note: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn rank_ratio_examples() {
        let v = DVector::from_vec(vec![0.3, -1.2, 0.7, 2.0]);
        assert!(rank_ratio(&(&v * v.transpose())).delta < 1e-12);
        assert_eq!(rank_ratio(&DMatrix::identity(2, 2)).delta, 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-6, 0.0]));
        assert!((rank_ratio(&d).delta - 1e-6).abs() < 1e-18);
        let z = rank_ratio(&DMatrix::zeros(3, 3));
        assert!(z.degenerate && z.delta == 1.0);
    }

    #[test]
    fn suboptimality_examples() {
        assert_eq!(suboptimality(1.0, 1.0), Suboptimality::Relative(0.0));
        assert!((suboptimality(0.99, 1.0).value() - 0.01).abs() < 1e-15);
        assert_eq!(suboptimality(-0.5, 0.0), Suboptimality::Absolute(0.5));
    }

    #[test]
    fn classification() {
        assert_eq!(classify_feasibility(RelaxStatus::Infeasible, 0.0, 1000.0), Feasibility::Infeasible);
        assert_eq!(classify_feasibility(RelaxStatus::Optimal, 3.2, 1000.0), Feasibility::Feasible);
        assert_eq!(classify_feasibility(RelaxStatus::SlowProgress, 12.0, 1000.0), Feasibility::Undecided);
        assert_eq!(classify_feasibility(RelaxStatus::Optimal, 1500.0, 1000.0), Feasibility::Infeasible);
    }
}
