use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::MomentError;
use crate::planning::{clique_partition, PlanningPop};
use crate::poly::{Monomial, Polynomial, VarId};

/// Constants left after substitution below this (relative) size are treated as zero.
const CONSTANT_TOL: f64 = 1e-9;
/// Coefficients below this fraction of the largest one are dropped after substitution.
const PRUNE_TOL: f64 = 1e-13;
/// A variable may be eliminated from an affine equality when its coefficient is at least this
/// fraction of the largest one.
const PIVOT_FRACTION: f64 = 0.1;

/// Result of exact presolve: the reduced problem plus what is needed to recover the
/// eliminated variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Presolved {
    /// Reduced problem over the surviving variables; `cliques` only contains those.
    pub pop: PlanningPop,
    /// `v = expr` in elimination order; every `expr` is written in the surviving variables.
    pub definitions: Vec<(VarId, Polynomial)>,
    /// Free variables that no longer occur anywhere; they are reported as 0.
    pub unused: Vec<VarId>,
}

impl Presolved {
    /// Variables still present in the reduced problem.
    pub fn alive(&self) -> Vec<VarId> {
        let set: BTreeSet<VarId> = self.pop.cliques.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// Dense point over the original registry from values of the surviving variables.
    pub fn reconstruct(&self, values: &BTreeMap<VarId, f64>) -> Vec<f64> {
        let mut x = self.pop.embed(values);
        for (v, expr) in self.definitions.iter().rev() {
            x[v.index()] = expr.eval(&x);
        }
        x
    }
}

fn prune(p: &Polynomial) -> Polynomial {
    let m = p.max_abs_coeff();
    if m == 0.0 {
        return p.clone();
    }
    p.pruned(PRUNE_TOL * m.max(1.0))
}

/// Picks the variable to eliminate from an affine polynomial.
fn affine_pivot(g: &Polynomial) -> Option<(VarId, f64)> {
    if g.degree() != 1 {
        return None;
    }
    let lin: Vec<(VarId, f64)> = g
        .terms()
        .filter(|(m, _)| m.degree() == 1)
        .map(|(m, c)| (m.powers()[0].0, c))
        .collect();
    let max = lin.iter().fold(0.0f64, |a, t| a.max(t.1.abs()));
    lin.into_iter()
        .filter(|t| t.1.abs() >= PIVOT_FRACTION * max)
        .max_by_key(|t| t.0)
}

fn normalized_key(g: &Polynomial) -> Vec<(Monomial, u64)> {
    let lead = g.terms().last().map(|t| t.1).unwrap_or(1.0);
    g.terms().map(|(m, c)| (m.clone(), (c / lead).to_bits())).collect()
}

/// Substitutes affinely defined variables until none are left, drops zero and duplicate
/// constraints, detects constant contradictions and rebuilds the cliques.
pub fn presolve(pop: &PlanningPop) -> Result<Presolved, MomentError> {
    let mut objective = pop.objective.clone();
    let mut eqs: Vec<(Polynomial, f64)> = pop
        .equalities
        .iter()
        .map(|g| (g.clone(), 1.0 + g.max_abs_coeff()))
        .collect();
    let mut ineqs: Vec<(Polynomial, f64)> = pop
        .inequalities
        .iter()
        .map(|g| (g.clone(), 1.0 + g.max_abs_coeff()))
        .collect();
    let mut cliques: Vec<BTreeSet<VarId>> = pop
        .cliques
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    let mut definitions: Vec<(VarId, Polynomial)> = Vec::new();

    loop {
        // constant and zero equalities
        let mut next = Vec::with_capacity(eqs.len());
        for (g, scale) in eqs {
            if g.degree() == 0 {
                let c = g.constant_term();
                if c.abs() > CONSTANT_TOL * scale {
                    return Err(MomentError::Infeasible(format!(
                        "equality reduces to the constant {c:e}"
                    )));
                }
                continue;
            }
            next.push((g, scale));
        }
        eqs = next;
        let Some(pos) = eqs.iter().position(|(g, _)| affine_pivot(g).is_some()) else {
            break;
        };
        let (g, _) = eqs.swap_remove(pos);
        let (v, a) = affine_pivot(&g).expect("checked above");
        let mut rest = g.clone();
        rest.add_term(Monomial::var(v), -a);
        let expr = prune(&rest.scale(-1.0 / a));
        let support = expr.support_vars();
        let map: HashMap<VarId, Polynomial> = [(v, expr.clone())].into_iter().collect();
        let apply = |p: &mut Polynomial| {
            if p.support_vars().contains(&v) {
                *p = prune(&p.substitute(&map));
            }
        };
        apply(&mut objective);
        eqs.iter_mut().for_each(|(p, _)| apply(p));
        ineqs.iter_mut().for_each(|(p, _)| apply(p));
        for (_, d) in definitions.iter_mut() {
            apply(d);
        }
        for c in cliques.iter_mut() {
            if c.remove(&v) {
                c.extend(support.iter().copied());
            }
        }
        definitions.push((v, expr));
    }

    // definitions were kept fully substituted, so each depends only on surviving variables
    let mut kept_ineqs = Vec::new();
    for (g, scale) in ineqs {
        if g.degree() == 0 {
            let c = g.constant_term();
            if c < -CONSTANT_TOL * scale {
                return Err(MomentError::Infeasible(format!(
                    "inequality reduces to the constant {c:e}"
                )));
            }
            continue;
        }
        kept_ineqs.push(g);
    }
    let mut seen = HashSet::new();
    let equalities: Vec<Polynomial> = eqs
        .into_iter()
        .map(|t| t.0)
        .filter(|g| seen.insert(normalized_key(g)))
        .collect();
    let mut seen = HashSet::new();
    let inequalities: Vec<Polynomial> = kept_ineqs
        .into_iter()
        .filter(|g| seen.insert(normalized_key(g)))
        .collect();

    let mut used: BTreeSet<VarId> = objective.support_vars();
    for g in equalities.iter().chain(&inequalities) {
        used.extend(g.support_vars());
    }
    let eliminated: BTreeSet<VarId> = definitions.iter().map(|d| d.0).collect();
    let unused: Vec<VarId> = pop
        .free_vars()
        .into_iter()
        .filter(|v| !used.contains(v) && !eliminated.contains(v))
        .collect();
    for c in cliques.iter_mut() {
        c.retain(|v| used.contains(v));
    }
    // drop empty and subsumed cliques, keeping the first of equal ones
    let mut reduced: Vec<Vec<VarId>> = Vec::new();
    for (k, c) in cliques.iter().enumerate() {
        if c.is_empty() {
            continue;
        }
        let subsumed = cliques.iter().enumerate().any(|(j, d)| {
            j != k && c.is_subset(d) && (c.len() < d.len() || j < k)
        });
        if !subsumed {
            reduced.push(c.iter().copied().collect());
        }
    }

    let mut out = PlanningPop {
        registry: pop.registry.clone(),
        objective,
        equalities,
        inequalities,
        cliques: reduced,
        layout: pop.layout.clone(),
        fixed: pop.fixed.clone(),
    };
    // variables used but dropped from every clique cannot happen; recheck the structure
    out.cliques = clique_partition(&out)?;
    Ok(Presolved {
        pop: out,
        definitions,
        unused,
    })
}
