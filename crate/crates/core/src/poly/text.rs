//! Line-oriented text form of polynomials: `coeff * x3^2*x7` terms joined by ` + `,
//! in graded lex order. The zero polynomial is written `0`.

use std::fmt::Write;

use super::{Monomial, PolyError, Polynomial, Registry};

pub fn to_text(p: &Polynomial, reg: &Registry) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().enumerate() {
        if i > 0 {
            out.push_str(" + ");
        }
        write!(out, "{c:?}").unwrap();
        if !m.is_one() {
            out.push_str(" * ");
            out.push_str(&monomial_text(m, reg));
        }
    }
    out
}

pub fn monomial_text(m: &Monomial, reg: &Registry) -> String {
    if m.is_one() {
        return "1".to_string();
    }
    let mut out = String::new();
    for (i, &(v, e)) in m.powers().iter().enumerate() {
        if i > 0 {
            out.push('*');
        }
        if reg.contains(v) {
            out.push_str(reg.name(v));
        } else {
            write!(out, "{v}").unwrap();
        }
        if e > 1 {
            write!(out, "^{e}").unwrap();
        }
    }
    out
}

pub fn parse_text(s: &str, reg: &Registry) -> Result<Polynomial, PolyError> {
    let s = s.trim();
    if s == "0" {
        return Ok(Polynomial::zero());
    }
    let mut p = Polynomial::zero();
    for term in s.split(" + ") {
        let term = term.trim();
        let (coef, rest) = match term.split_once(" * ") {
            Some((c, r)) => (c, Some(r)),
            None => (term, None),
        };
        let c: f64 = coef
            .trim()
            .parse()
            .map_err(|_| PolyError::Parse(format!("bad coefficient `{coef}`")))?;
        let mut powers = Vec::new();
        if let Some(rest) = rest {
            for factor in rest.split('*') {
                let (name, e) = match factor.split_once('^') {
                    Some((n, e)) => (
                        n,
                        e.parse::<u32>()
                            .map_err(|_| PolyError::Parse(format!("bad exponent in `{factor}`")))?,
                    ),
                    None => (factor, 1),
                };
                let v = reg
                    .get(name.trim())
                    .ok_or_else(|| PolyError::Parse(format!("unknown variable `{name}`")))?;
                powers.push((v, e));
            }
        }
        p.add_term(Monomial::from_powers(powers), c);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_and_parse() {
        let mut reg = Registry::new();
        let ids = reg.add_block("x", 8).unwrap();
        let p = Polynomial::from_terms([
            (Monomial::from_powers([(ids[3], 2), (ids[7], 1)]), 2.5),
            (Monomial::one(), -1.0),
        ]);
        let s = to_text(&p, &reg);
        assert_eq!(s, "-1.0 + 2.5 * x[3]^2*x[7]");
        assert_eq!(parse_text(&s, &reg).unwrap(), p);
        assert_eq!(to_text(&Polynomial::zero(), &reg), "0");
        assert!(parse_text("1.0 * y", &reg).is_err());
    }
}
