use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::PlanningError;
use crate::poly::{Polynomial, Registry, VarId};

/// A polynomial optimization problem `min f(x)` s.t. `h_i(x) = 0`, `g_j(x) >= 0` together with
/// its clique structure and a named variable layout.
///
/// Variables listed in `fixed` are registered but already substituted out of every
/// polynomial; they are kept so that extracted points can report full poses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanningPop {
    pub registry: Registry,
    pub objective: Polynomial,
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
    pub cliques: Vec<Vec<VarId>>,
    pub layout: BTreeMap<String, Vec<VarId>>,
    #[serde(with = "pairs")]
    pub fixed: BTreeMap<VarId, f64>,
}

/// Maps with non-string keys are written as `[key, value]` lists.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(m: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Objective,
    Equality,
    Inequality,
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConstraintKind::Objective => "objective term",
            ConstraintKind::Equality => "equality",
            ConstraintKind::Inequality => "inequality",
        })
    }
}

impl PlanningPop {
    /// Variables that are not fixed, in registry order.
    pub fn free_vars(&self) -> Vec<VarId> {
        self.registry
            .ids()
            .filter(|v| !self.fixed.contains_key(v))
            .collect()
    }

    pub fn max_degree(&self) -> u32 {
        std::iter::once(&self.objective)
            .chain(&self.equalities)
            .chain(&self.inequalities)
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn polynomials(&self) -> impl Iterator<Item = &Polynomial> {
        std::iter::once(&self.objective)
            .chain(&self.equalities)
            .chain(&self.inequalities)
    }

    /// Dense point (indexed by [`VarId`]) with fixed variables filled in and others zero.
    pub fn embed(&self, values: &BTreeMap<VarId, f64>) -> Vec<f64> {
        let mut x = vec![0.0; self.registry.len()];
        for (v, val) in self.fixed.iter().chain(values) {
            x[v.index()] = *val;
        }
        x
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest equality residual and largest inequality violation at `x`.
    pub fn violation(&self, x: &[f64]) -> (f64, f64) {
        let eq = self
            .equalities
            .iter()
            .map(|p| p.eval(x).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|p| (-p.eval(x)).max(0.0))
            .fold(0.0, f64::max);
        (eq, ineq)
    }

    /// Same problem with a single clique holding every free variable.
    pub fn densified(&self) -> PlanningPop {
        let mut p = self.clone();
        let mut all: BTreeSet<VarId> = BTreeSet::new();
        for c in &self.cliques {
            all.extend(c);
        }
        for q in self.polynomials() {
            all.extend(q.support_vars());
        }
        p.cliques = vec![all.into_iter().collect()];
        p
    }

    /// Index of the first clique containing `support`.
    pub fn clique_of(&self, support: &BTreeSet<VarId>) -> Option<usize> {
        self.cliques
            .iter()
            .position(|c| support.iter().all(|v| c.binary_search(v).is_ok()))
    }
}

/// Checks that every constraint and every objective term is supported in a single clique,
/// and that the cliques satisfy the running intersection property in the given order.
pub fn clique_partition(pop: &PlanningPop) -> Result<Vec<Vec<VarId>>, PlanningError> {
    let mut cliques = pop.cliques.clone();
    for c in &mut cliques {
        c.sort_unstable();
        c.dedup();
    }
    let sorted = PlanningPop {
        cliques: cliques.clone(),
        ..Default::default()
    };
    for (i, (m, _)) in pop.objective.terms().enumerate() {
        let s: BTreeSet<VarId> = m.vars().collect();
        if !s.is_empty() && sorted.clique_of(&s).is_none() {
            return Err(PlanningError::Unsupported {
                kind: ConstraintKind::Objective,
                index: i,
            });
        }
    }
    for (kind, list) in [
        (ConstraintKind::Equality, &pop.equalities),
        (ConstraintKind::Inequality, &pop.inequalities),
    ] {
        for (i, g) in list.iter().enumerate() {
            let s = g.support_vars();
            if !s.is_empty() && sorted.clique_of(&s).is_none() {
                return Err(PlanningError::Unsupported { kind, index: i });
            }
        }
    }
    let mut union: BTreeSet<VarId> = BTreeSet::new();
    for (k, c) in cliques.iter().enumerate() {
        if k > 0 {
            let inter: Vec<VarId> = c.iter().copied().filter(|v| union.contains(v)).collect();
            let covered = cliques[..k]
                .iter()
                .any(|prev| inter.iter().all(|v| prev.binary_search(v).is_ok()));
            if !covered {
                return Err(PlanningError::RunningIntersection { clique: k });
            }
        }
        union.extend(c);
    }
    Ok(cliques)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: u32, cliques: Vec<Vec<u32>>, coupling: &[(u32, u32)]) -> PlanningPop {
        let mut registry = Registry::new();
        registry.add_block("x", n as usize).unwrap();
        let equalities = coupling
            .iter()
            .map(|&(a, b)| &Polynomial::var(VarId(a)) * &Polynomial::var(VarId(b)))
            .collect();
        PlanningPop {
            registry,
            equalities,
            cliques: cliques
                .into_iter()
                .map(|c| c.into_iter().map(VarId).collect())
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn markov_chain_is_valid() {
        let p = chain(4, vec![vec![0, 1], vec![1, 2], vec![2, 3]], &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(clique_partition(&p).unwrap().len(), 3);
    }

    #[test]
    fn single_clique_is_valid() {
        let p = chain(4, vec![vec![0, 1, 2, 3]], &[(0, 3)]);
        assert!(clique_partition(&p).is_ok());
    }

    #[test]
    fn coupling_across_cliques_is_rejected() {
        let p = chain(4, vec![vec![0, 1], vec![2, 3]], &[(0, 1), (1, 2)]);
        assert_eq!(
            clique_partition(&p),
            Err(PlanningError::Unsupported {
                kind: ConstraintKind::Equality,
                index: 1
            })
        );
    }

    #[test]
    fn rip_violation_is_reported() {
        let p = chain(4, vec![vec![0, 1], vec![2, 3], vec![0, 2]], &[]);
        assert_eq!(
            clique_partition(&p),
            Err(PlanningError::RunningIntersection { clique: 2 })
        );
    }
}
