use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Monomial, VarId};

/// All monomials of degree `<= r` over an ordered variable list, in graded lex order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "BasisRepr", into = "BasisRepr")]
pub struct Basis {
    vars: Vec<VarId>,
    degree: u32,
    elements: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

#[derive(Serialize, Deserialize)]
struct BasisRepr {
    vars: Vec<VarId>,
    degree: u32,
    elements: Vec<Monomial>,
}

impl From<BasisRepr> for Basis {
    fn from(r: BasisRepr) -> Self {
        Basis::from_elements(r.vars, r.degree, r.elements)
    }
}

impl From<Basis> for BasisRepr {
    fn from(b: Basis) -> Self {
        BasisRepr {
            vars: b.vars,
            degree: b.degree,
            elements: b.elements,
        }
    }
}

/// Binomial coefficient `C(n, k)` in `u64`, saturating on overflow.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Generates `v_r(x)` over `vars`. Variables are sorted and deduplicated first.
pub fn monomial_basis(vars: &[VarId], r: u32) -> Basis {
    let mut vars = vars.to_vec();
    vars.sort_unstable();
    vars.dedup();
    let mut elements = Vec::with_capacity(binomial((vars.len() + r as usize) as u64, r as u64) as usize);
    let mut exps = vec![0u32; vars.len()];
    for d in 0..=r {
        fill(&vars, &mut exps, 0, d, &mut elements);
    }
    Basis::from_elements(vars, r, elements)
}

// Emits degree-`left` exponent tails starting at position `i`, largest leading exponent first.
fn fill(vars: &[VarId], exps: &mut [u32], i: usize, left: u32, out: &mut Vec<Monomial>) {
    if i + 1 >= vars.len() {
        if let Some(e) = exps.get_mut(i) {
            *e = left;
        } else if left > 0 {
            return;
        }
        out.push(Monomial::from_powers(
            vars.iter().copied().zip(exps.iter().copied()),
        ));
        return;
    }
    for e in (0..=left).rev() {
        exps[i] = e;
        fill(vars, exps, i + 1, left - e, out);
    }
    exps[i] = 0;
}

impl Basis {
    fn from_elements(vars: Vec<VarId>, degree: u32, elements: Vec<Monomial>) -> Self {
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Basis {
            vars,
            degree,
            elements,
            index,
        }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Monomial] {
        &self.elements
    }

    pub fn get(&self, i: usize) -> &Monomial {
        &self.elements[i]
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Number of leading elements with degree `<= d`.
    pub fn prefix_len(&self, d: u32) -> usize {
        binomial((self.vars.len() + d.min(self.degree) as usize) as u64, d.min(self.degree) as u64)
            as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(n: u32) -> Vec<VarId> {
        (1..=n).map(VarId).collect()
    }

    #[test]
    fn two_vars_degree_two() {
        let b = monomial_basis(&vars(2), 2);
        let names: Vec<String> = b
            .elements()
            .iter()
            .map(|m| format!("{:?}", m.exponents_over(&vars(2))))
            .collect();
        assert_eq!(
            names,
            ["[0, 0]", "[1, 0]", "[0, 1]", "[2, 0]", "[1, 1]", "[0, 2]"]
        );
    }

    #[test]
    fn constant_basis() {
        let b = monomial_basis(&vars(1), 0);
        assert_eq!(b.len(), 1);
        assert!(b.get(0).is_one());
    }

    #[test]
    fn three_vars_degree_two_has_ten() {
        assert_eq!(monomial_basis(&vars(3), 2).len(), 10);
    }

    #[test]
    fn elements_are_sorted_and_indexed() {
        let b = monomial_basis(&vars(4), 3);
        assert!(b.elements().windows(2).all(|w| w[0] < w[1]));
        for (i, m) in b.elements().iter().enumerate() {
            assert_eq!(b.position(m), Some(i));
        }
        assert_eq!(b.prefix_len(1), 5);
        assert_eq!(b.prefix_len(2), 15);
    }

    #[test]
    fn serde_round_trip_keeps_order() {
        let b = monomial_basis(&vars(3), 3);
        let s = serde_json::to_string(&b).unwrap();
        let c: Basis = serde_json::from_str(&s).unwrap();
        assert_eq!(b.elements(), c.elements());
        assert_eq!(c.position(c.get(7)), Some(7));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }
}
