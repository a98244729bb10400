use std::collections::BTreeMap;

use lpp_core::poly::{binomial, monomial_basis, text, Basis, Monomial, Polynomial, Registry, VarId};
use proptest::prelude::*;

fn arb_poly(nvars: u32, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(
        (
            prop::collection::vec((0..nvars, 0..=max_deg), 0..3),
            -5i32..=5,
        ),
        0..max_terms,
    )
    .prop_map(|terms| {
        Polynomial::from_terms(terms.into_iter().map(|(pw, c)| {
            (
                Monomial::from_powers(pw.into_iter().map(|(v, e)| (VarId(v), e))),
                c as f64,
            )
        }))
    })
}

// Dense coefficient expansion used as an independent product oracle.
fn naive_mul(a: &Polynomial, b: &Polynomial) -> BTreeMap<Vec<u32>, f64> {
    let n = 4;
    let vars: Vec<VarId> = (0..n).map(VarId).collect();
    let mut out = BTreeMap::new();
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            let ea = ma.exponents_over(&vars);
            let eb = mb.exponents_over(&vars);
            let e: Vec<u32> = ea.iter().zip(&eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0.0);
    out
}

fn naive_eval(p: &Polynomial, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (m, c) in p.terms() {
        let mut t = c;
        for &(v, e) in m.powers() {
            for _ in 0..e {
                t *= x[v.index()];
            }
        }
        s += t;
    }
    s
}

proptest! {
    #[test]
    fn ring_axioms(a in arb_poly(4, 2, 5), b in arb_poly(4, 2, 5), c in arb_poly(4, 2, 5)) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn product_matches_expansion(a in arb_poly(4, 2, 4), b in arb_poly(4, 2, 4)) {
        let p = &a * &b;
        let vars: Vec<VarId> = (0..4).map(VarId).collect();
        let got: BTreeMap<Vec<u32>, f64> =
            p.terms().map(|(m, c)| (m.exponents_over(&vars), c)).collect();
        prop_assert_eq!(got, naive_mul(&a, &b));
        if !a.is_zero() && !b.is_zero() {
            prop_assert_eq!(p.degree(), a.degree() + b.degree());
        }
    }

    #[test]
    fn evaluation_is_multiplicative(
        a in arb_poly(4, 3, 6),
        b in arb_poly(4, 3, 6),
        x in prop::collection::vec(-1.5f64..1.5, 4),
    ) {
        let pa = a.eval(&x);
        let pb = b.eval(&x);
        let pab = (&a * &b).eval(&x);
        prop_assert!((pab - pa * pb).abs() <= 1e-12 * (1.0 + (pa * pb).abs()).max(pab.abs()));
        prop_assert!((pa - naive_eval(&a, &x)).abs() <= 1e-14 * (1.0 + pa.abs()) * 10.0);
    }

    #[test]
    fn basis_length(n in 1u32..=8, r in 0u32..=4) {
        let vars: Vec<VarId> = (0..n).map(VarId).collect();
        let b = monomial_basis(&vars, r);
        prop_assert_eq!(b.len() as u64, binomial((n + r) as u64, n as u64));
        prop_assert!(b.get(0).is_one());
        let json = serde_json::to_string(&b).unwrap();
        let back: Basis = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.elements(), b.elements());
    }

    #[test]
    fn text_round_trip(a in arb_poly(6, 3, 6)) {
        let mut reg = Registry::new();
        reg.add_block("x", 6).unwrap();
        let s = text::to_text(&a, &reg);
        prop_assert_eq!(text::parse_text(&s, &reg).unwrap(), a);
    }
}
