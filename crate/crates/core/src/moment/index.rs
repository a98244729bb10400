use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MomentError;
use crate::poly::{binomial, monomial_basis, Monomial, Polynomial, VarId};

/// Flat numbering of the pseudo-moments `y_α` of a (possibly sparse) relaxation.
///
/// Positions are assigned clique by clique in chain order, each clique contributing the
/// monomials of degree `<= 2κ` over its variables that no earlier clique already owns. A
/// moment shared by overlapping cliques is therefore aliased to the lowest clique index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "IndexRepr", into = "IndexRepr")]
pub struct MomentIndex {
    order: u32,
    cliques: Vec<Vec<VarId>>,
    moments: Vec<Monomial>,
    owner: Vec<u32>,
    position: HashMap<Monomial, usize>,
}

#[derive(Serialize, Deserialize)]
struct IndexRepr {
    order: u32,
    cliques: Vec<Vec<VarId>>,
    moments: Vec<Monomial>,
    owner: Vec<u32>,
}

impl From<IndexRepr> for MomentIndex {
    fn from(r: IndexRepr) -> Self {
        let position = r.moments.iter().cloned().zip(0..).collect();
        Self {
            order: r.order,
            cliques: r.cliques,
            moments: r.moments,
            owner: r.owner,
            position,
        }
    }
}

impl From<MomentIndex> for IndexRepr {
    fn from(m: MomentIndex) -> Self {
        Self {
            order: m.order,
            cliques: m.cliques,
            moments: m.moments,
            owner: m.owner,
        }
    }
}

impl MomentIndex {
    /// Number of positions `build` would create, without building anything.
    pub fn count(cliques: &[Vec<VarId>], order: u32) -> u64 {
        // upper bound: overlaps are counted once per clique
        cliques
            .iter()
            .map(|c| binomial((c.len() as u32 + 2 * order) as u64, (2 * order) as u64))
            .fold(0u64, u64::saturating_add)
    }

    /// `cliques` must be sorted; an empty list yields the single moment `y_0`.
    pub fn build(cliques: &[Vec<VarId>], order: u32) -> Self {
        let cliques: Vec<Vec<VarId>> = if cliques.is_empty() {
            vec![Vec::new()]
        } else {
            cliques.to_vec()
        };
        let mut moments = Vec::new();
        let mut owner = Vec::new();
        let mut position = HashMap::new();
        for (k, c) in cliques.iter().enumerate() {
            for m in monomial_basis(c, 2 * order).elements() {
                if !position.contains_key(m) {
                    position.insert(m.clone(), moments.len());
                    moments.push(m.clone());
                    owner.push(k as u32);
                }
            }
        }
        Self {
            order,
            cliques,
            moments,
            owner,
            position,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn cliques(&self) -> &[Vec<VarId>] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    pub fn moments(&self) -> &[Monomial] {
        &self.moments
    }

    pub fn moment(&self, pos: usize) -> &Monomial {
        &self.moments[pos]
    }

    /// Canonical position of `m`, if some clique contains all of its variables.
    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.position.get(m).copied()
    }

    /// Clique that owns a position.
    pub fn owner(&self, pos: usize) -> usize {
        self.owner[pos] as usize
    }

    /// Moments of clique `k` that are owned by an earlier clique, as `(monomial, position)`.
    pub fn aliases(&self, k: usize) -> Vec<(Monomial, usize)> {
        monomial_basis(&self.cliques[k], 2 * self.order)
            .elements()
            .iter()
            .filter_map(|m| {
                let p = self.position[m];
                (self.owner(p) < k).then(|| (m.clone(), p))
            })
            .collect()
    }

    /// Position of the first-order moment `y_{e_v}`.
    pub fn first_order(&self, v: VarId) -> Option<usize> {
        self.position(&Monomial::var(v))
    }
}

/// `L_y(p) = Σ p_α y_α` as a sparse row over moment positions, sorted by position.
pub fn lift_functional(p: &Polynomial, idx: &MomentIndex) -> Result<Vec<(usize, f64)>, MomentError> {
    let mut row = Vec::with_capacity(p.num_terms());
    for (m, c) in p.terms() {
        if m.degree() > 2 * idx.order {
            return Err(MomentError::DegreeTooHigh {
                degree: m.degree(),
                max: 2 * idx.order,
            });
        }
        let pos = idx
            .position(m)
            .ok_or_else(|| MomentError::NotInClique(m.clone()))?;
        row.push((pos, c));
    }
    row.sort_by_key(|t| t.0);
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_moments_alias_to_first_clique() {
        let a = vec![VarId(0), VarId(1), VarId(2)];
        let b = vec![VarId(2), VarId(3), VarId(4)];
        let idx = MomentIndex::build(&[a, b], 2);
        // C(7,4) per clique, minus the C(5,4) moments in x2 alone
        assert_eq!(idx.len(), 35 + 35 - 5);
        let x2sq = Monomial::from_powers([(VarId(2), 2)]);
        assert_eq!(idx.owner(idx.position(&x2sq).unwrap()), 0);
        assert_eq!(idx.aliases(1).len(), 5);
        assert!(idx.position(&Monomial::from_powers([(VarId(0), 1), (VarId(4), 1)])).is_none());
    }

    #[test]
    fn lift_constant_and_square() {
        let idx = MomentIndex::build(&[vec![VarId(0), VarId(1)]], 2);
        let row = lift_functional(&Polynomial::constant(3.0), &idx).unwrap();
        assert_eq!(row, vec![(0, 3.0)]);
        let sq = Polynomial::monomial(Monomial::from_powers([(VarId(0), 2)]), 1.0);
        assert_eq!(lift_functional(&sq, &idx).unwrap(), vec![(3, 1.0)]);
        let high = Polynomial::monomial(Monomial::from_powers([(VarId(0), 5)]), 1.0);
        assert_eq!(
            lift_functional(&high, &idx),
            Err(MomentError::DegreeTooHigh { degree: 5, max: 4 })
        );
    }

    #[test]
    fn json_round_trip() {
        let idx = MomentIndex::build(&[vec![VarId(0), VarId(1)], vec![VarId(1), VarId(2)]], 1);
        let s = serde_json::to_string(&idx).unwrap();
        assert_eq!(serde_json::from_str::<MomentIndex>(&s).unwrap(), idx);
    }
}
