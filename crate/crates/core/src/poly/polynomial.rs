use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::{Monomial, PolyError, Registry, VarId};

/// Sparse real polynomial `Σ p_α x^α`. Zero coefficients are never stored.
///
/// The zero polynomial has an empty term map; its [`degree`](Self::degree) is reported
/// as 0 and [`is_zero`](Self::is_zero) distinguishes it from nonzero constants.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(Monomial, f64)>", into = "Vec<(Monomial, f64)>")]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Scale(f64),
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: VarId) -> Self {
        Self::monomial(Monomial::var(v), 1.0)
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// `Σ coef_i · x_i + c`.
    pub fn affine(terms: &[(VarId, f64)], c: f64) -> Self {
        let mut p = Self::constant(c);
        for &(v, a) in terms {
            p.add_term(Monomial::var(v), a);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = *e.get() + c;
                if v == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&Monomial::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn support_vars(&self) -> BTreeSet<VarId> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        if c == 0.0 {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, &v)| (m.clone(), v * c))
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, &c| a.max(c.abs()))
    }

    /// Drops terms with `|coef| <= tol`.
    pub fn pruned(&self, tol: f64) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(m, &c)| (m.clone(), c))
                .collect(),
        }
    }

    /// Evaluates at a dense point indexed by [`VarId`].
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum()
    }

    /// Evaluates at a sparse assignment; every variable of the support must be assigned.
    pub fn evaluate(&self, point: &BTreeMap<VarId, f64>) -> Result<f64, PolyError> {
        let mut total = 0.0;
        for (m, &c) in &self.terms {
            let mut t = c;
            for &(v, e) in m.powers() {
                let xv = point.get(&v).ok_or(PolyError::MissingAssignment(v))?;
                t *= xv.powi(e as i32);
            }
            total += t;
        }
        Ok(total)
    }

    pub fn partial(&self, v: VarId) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, &c) in &self.terms {
            let e = m.exponent(v);
            if e > 0 {
                out.add_term(m.without_one(v).expect("exponent checked"), c * e as f64);
            }
        }
        out
    }

    /// Replaces each variable in `map` by its polynomial.
    pub fn substitute(&self, map: &HashMap<VarId, Polynomial>) -> Polynomial {
        if map.is_empty() {
            return self.clone();
        }
        let mut out = Polynomial::zero();
        for (m, &c) in &self.terms {
            let mut kept = Vec::new();
            let mut prod = Polynomial::constant(c);
            for &(v, e) in m.powers() {
                match map.get(&v) {
                    Some(q) => {
                        for _ in 0..e {
                            prod = &prod * q;
                        }
                    }
                    None => kept.push((v, e)),
                }
            }
            let kept = Monomial::from_powers(kept);
            for (pm, pc) in prod.terms {
                out.add_term(pm.mul(&kept), pc);
            }
        }
        out
    }

    /// Checked arithmetic: both operands must only use variables from `registry`.
    pub fn arith(
        registry: &Registry,
        a: &Polynomial,
        b: &Polynomial,
        op: ArithOp,
    ) -> Result<Polynomial, PolyError> {
        registry.check(a)?;
        registry.check(b)?;
        Ok(match op {
            ArithOp::Add => a + b,
            ArithOp::Sub => a - b,
            ArithOp::Mul => a * b,
            ArithOp::Scale(c) => a.scale(c),
        })
    }
}

impl AddAssign<&Polynomial> for Polynomial {
    fn add_assign(&mut self, rhs: &Polynomial) {
        for (m, &c) in &rhs.terms {
            self.add_term(m.clone(), c);
        }
    }
}

impl SubAssign<&Polynomial> for Polynomial {
    fn sub_assign(&mut self, rhs: &Polynomial) {
        for (m, &c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: &Polynomial) -> Polynomial {
                (&self).$f(rhs)
            }
        }
        impl $tr<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                self.$f(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl From<f64> for Polynomial {
    fn from(c: f64) -> Self {
        Polynomial::constant(c)
    }
}

impl From<Vec<(Monomial, f64)>> for Polynomial {
    fn from(terms: Vec<(Monomial, f64)>) -> Self {
        Polynomial::from_terms(terms)
    }
}

impl From<Polynomial> for Vec<(Monomial, f64)> {
    fn from(p: Polynomial) -> Self {
        p.terms.into_iter().collect()
    }
}

impl From<VarId> for Polynomial {
    fn from(v: VarId) -> Self {
        Polynomial::var(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u32) -> Polynomial {
        Polynomial::var(VarId(i))
    }

    #[test]
    fn difference_of_squares() {
        let one = Polynomial::constant(1.0);
        let p = (&x(1) + &one) * (&x(1) - &one);
        let want = &(&x(1) * &x(1)) - &one;
        assert_eq!(p, want);
        assert_eq!(p.num_terms(), 2);
    }

    #[test]
    fn additive_identity() {
        let p = &(&x(0) * &x(2)).scale(3.0) + &Polynomial::constant(-2.0);
        assert_eq!(&p + &Polynomial::zero(), p);
    }

    #[test]
    fn cancellation_prunes_terms() {
        let p = &x(0) - &x(0);
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
        let mut q = x(3);
        q.add_term(Monomial::one(), 2.0);
        q.add_term(Monomial::one(), -2.0);
        assert_eq!(q, x(3));
    }

    #[test]
    fn evaluate_and_missing_assignment() {
        let p = &(&x(1) * &x(1)) - &Polynomial::constant(1.0);
        let mut pt = BTreeMap::new();
        pt.insert(VarId(1), 1.0);
        assert_eq!(p.evaluate(&pt).unwrap(), 0.0);
        assert_eq!(Polynomial::constant(7.0).evaluate(&BTreeMap::new()).unwrap(), 7.0);
        let q = &x(1) * &x(4);
        assert_eq!(q.evaluate(&pt), Err(PolyError::MissingAssignment(VarId(4))));
    }

    #[test]
    fn support_of_terms() {
        let p = &(&x(1) * &x(3)) + &(&x(3) * &x(3));
        assert_eq!(p.support_vars(), [VarId(1), VarId(3)].into_iter().collect());
        assert!(Polynomial::constant(4.0).support_vars().is_empty());
        let k = 6;
        let s = (0..k).fold(Polynomial::zero(), |acc, i| {
            &acc + &(&x(i * 2) * &x(i * 2)).scale(i as f64 + 1.0)
        });
        assert_eq!(s.support_vars().len(), k as usize);
    }

    #[test]
    fn partial_and_substitute() {
        let p = &(&x(0) * &x(0)) * &x(1);
        assert_eq!(p.partial(VarId(0)), (&x(0) * &x(1)).scale(2.0));
        let mut map = HashMap::new();
        map.insert(VarId(0), &x(2) + &Polynomial::constant(1.0));
        let q = p.substitute(&map);
        // (x2+1)^2 x1
        let want = &(&(&x(2) + &Polynomial::constant(1.0)) * &(&x(2) + &Polynomial::constant(1.0))) * &x(1);
        assert_eq!(q, want);
    }

    #[test]
    fn checked_arith_rejects_foreign_variable() {
        let mut reg = Registry::new();
        let a = reg.add("a").unwrap();
        let p = Polynomial::var(a);
        let q = Polynomial::var(VarId(5));
        assert!(Polynomial::arith(&reg, &p, &p, ArithOp::Mul).is_ok());
        assert_eq!(
            Polynomial::arith(&reg, &p, &q, ArithOp::Add),
            Err(PolyError::ForeignVariable(VarId(5)))
        );
    }
}
