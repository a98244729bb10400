use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Positional identifier of a scalar decision variable inside a [`Registry`](super::Registry).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

type Powers = SmallVec<[(VarId, u32); 4]>;

/// A power product `x^α`, stored sparsely as `(variable, exponent)` pairs sorted by variable.
///
/// Zero exponents are never stored, so the empty monomial is the constant `1`.
///
/// Monomials are totally ordered by graded lexicographic order: lower total degree first,
/// then, within a degree, the monomial with the larger exponent on the lowest-indexed
/// variable first. With two variables this lists `1, x1, x2, x1^2, x1*x2, x2^2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Monomial {
    powers: Powers,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: VarId) -> Self {
        let mut powers = Powers::new();
        powers.push((v, 1));
        Self { powers }
    }

    /// Builds a monomial from arbitrary `(var, exp)` pairs; repeated variables are merged
    /// and zero exponents dropped.
    pub fn from_powers<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Self {
        let mut powers: Powers = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        powers.sort_unstable_by_key(|&(v, _)| v);
        let mut merged = Powers::new();
        for (v, e) in powers {
            match merged.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        Self { powers: merged }
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &[(VarId, u32)] {
        &self.powers
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.powers
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.powers[i].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.powers.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.powers, &other.powers);
        let mut out = Powers::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { powers: out }
    }

    /// Divides out one power of `v`, returning `None` when `v` does not divide the monomial.
    pub fn without_one(&self, v: VarId) -> Option<Monomial> {
        let pos = self.powers.iter().position(|&(w, _)| w == v)?;
        let mut powers = self.powers.clone();
        if powers[pos].1 == 1 {
            powers.remove(pos);
        } else {
            powers[pos].1 -= 1;
        }
        Some(Monomial { powers })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.powers
            .iter()
            .map(|&(v, e)| x[v.index()].powi(e as i32))
            .product()
    }

    /// Exponent vector over an explicit variable list (variables outside the list are ignored).
    pub fn exponents_over(&self, vars: &[VarId]) -> Vec<u32> {
        vars.iter().map(|&v| self.exponent(v)).collect()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| lex_desc(&self.powers, &other.powers))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Larger exponent on the earliest variable sorts first.
fn lex_desc(a: &[(VarId, u32)], b: &[(VarId, u32)]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            (Some(&(va, ea)), Some(&(vb, eb))) => {
                if va == vb {
                    if ea != eb {
                        return if ea > eb { Ordering::Less } else { Ordering::Greater };
                    }
                    i += 1;
                    j += 1;
                } else if va < vb {
                    return Ordering::Less;
                } else {
                    return Ordering::Greater;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: &[(u32, u32)]) -> Monomial {
        Monomial::from_powers(p.iter().map(|&(v, e)| (VarId(v), e)))
    }

    #[test]
    fn grlex_order_two_vars() {
        let mut v = vec![
            m(&[(1, 2)]),
            m(&[(0, 1), (1, 1)]),
            m(&[]),
            m(&[(1, 1)]),
            m(&[(0, 2)]),
            m(&[(0, 1)]),
        ];
        v.sort();
        let want = vec![
            m(&[]),
            m(&[(0, 1)]),
            m(&[(1, 1)]),
            m(&[(0, 2)]),
            m(&[(0, 1), (1, 1)]),
            m(&[(1, 2)]),
        ];
        assert_eq!(v, want);
    }

    #[test]
    fn mul_merges_exponents() {
        let a = m(&[(0, 1), (2, 1)]);
        let b = m(&[(2, 2), (3, 1)]);
        assert_eq!(a.mul(&b), m(&[(0, 1), (2, 3), (3, 1)]));
        assert_eq!(a.mul(&Monomial::one()), a);
    }

    #[test]
    fn from_powers_drops_zero_and_merges() {
        let a = Monomial::from_powers([(VarId(3), 1), (VarId(1), 0), (VarId(3), 2)]);
        assert_eq!(a, m(&[(3, 3)]));
        assert_eq!(a.degree(), 3);
    }
}
