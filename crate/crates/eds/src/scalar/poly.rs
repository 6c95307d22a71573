//! Multivariate polynomials and rational functions in the system parameters,
//! with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

/// Power product of parameters, e.g. `n^2 m`.
pub type Monomial = BTreeMap<String, u32>;

/// Graded lexicographic order; unlike the raw `BTreeMap` order this is
/// multiplicative, which exact division relies on.
fn grlex(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    let da: u32 = a.values().sum();
    let db: u32 = b.values().sum();
    da.cmp(&db).then_with(|| {
        let mut vars: Vec<&String> = a.keys().chain(b.keys()).collect();
        vars.sort();
        vars.dedup();
        for v in vars {
            let ea = a.get(v).copied().unwrap_or(0);
            let eb = b.get(v).copied().unwrap_or(0);
            if ea != eb {
                return ea.cmp(&eb);
            }
        }
        std::cmp::Ordering::Equal
    })
}

/// Multivariate polynomial over exact rationals in named parameters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    /// monomial -> coefficient; no zero coefficients stored
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::new(), c);
        }
        Poly { terms }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::constant(BigRational::from(BigInt::from(n)))
    }

    pub fn var(name: &str) -> Self {
        let mut m = Monomial::new();
        m.insert(name.to_string(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(m, BigRational::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map_or(false, |c| c.is_one())
    }

    /// Some(c) if the polynomial is the constant c (including zero).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                if m.is_empty() {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Poly { terms }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                let entry = terms.entry(m).or_insert_with(BigRational::zero);
                *entry += c1 * c2;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Poly { terms }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut acc = Poly::constant(BigRational::one());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Exact division; None if `other` does not divide `self`.
    pub fn exact_div(&self, other: &Poly) -> Option<Poly> {
        if other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        // repeatedly divide the grlex-leading term of the remainder
        let (lead_m, lead_c) = other
            .terms
            .iter()
            .max_by(|(m1, _), (m2, _)| grlex(m1, m2))
            .unwrap();
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        loop {
            if rem.is_zero() {
                return Some(quot);
            }
            let (rm, rc) = rem
                .terms
                .iter()
                .max_by(|(m1, _), (m2, _)| grlex(m1, m2))
                .unwrap();
            let (rm, rc) = (rm.clone(), rc.clone());
            let mut qm = Monomial::new();
            for (v, e) in &rm {
                let oe = lead_m.get(v).copied().unwrap_or(0);
                if *e < oe {
                    return None;
                }
                if *e > oe {
                    qm.insert(v.clone(), e - oe);
                }
            }
            for (v, e) in lead_m {
                if rm.get(v).copied().unwrap_or(0) < *e {
                    return None;
                }
            }
            let qc = rc / lead_c;
            let mut qterm = Poly::zero();
            qterm.terms.insert(qm, qc);
            quot = quot.add(&qterm);
            rem = rem.sub(&qterm.mul(other));
        }
    }

    /// Substitute a parameter by a polynomial.
    pub fn subst(&self, name: &str, value: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut piece = Poly::constant(c.clone());
            for (v, e) in m {
                if v == name {
                    piece = piece.mul(&value.pow(*e));
                } else {
                    let mut mono = Monomial::new();
                    mono.insert(v.clone(), *e);
                    let mut p = Poly::zero();
                    p.terms.insert(mono, BigRational::one());
                    piece = piece.mul(&p);
                }
            }
            out = out.add(&piece);
        }
        out
    }

    pub fn vars(&self) -> Vec<String> {
        let mut vs: Vec<String> = Vec::new();
        for m in self.terms.keys() {
            for v in m.keys() {
                if !vs.contains(v) {
                    vs.push(v.clone());
                }
            }
        }
        vs.sort();
        vs
    }

    /// Degree in a single parameter.
    pub fn degree_in(&self, name: &str) -> u32 {
        self.terms
            .keys()
            .map(|m| m.get(name).copied().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Coefficient polynomial of `name^k`.
    pub fn coeff_of(&self, name: &str, k: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.get(name).copied().unwrap_or(0) == k {
                let mut m2 = m.clone();
                m2.remove(name);
                let entry = out.terms.entry(m2).or_insert_with(BigRational::zero);
                *entry += c;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    /// Evaluate at exact rational parameter values.
    pub fn eval(&self, values: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m {
                let val = values.get(v)?;
                for _ in 0..*e {
                    t *= val;
                }
            }
            acc += t;
        }
        Some(acc)
    }

    /// gcd of the rational coefficients times the common monomial factor.
    fn monomial_content(&self) -> (BigRational, Monomial) {
        if self.is_zero() {
            return (BigRational::one(), Monomial::new());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num::integer::gcd(num_gcd, c.numer().abs());
            den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
        }
        let content = BigRational::new(num_gcd, den_lcm);
        let mut mono: Option<Monomial> = None;
        for m in self.terms.keys() {
            mono = Some(match mono {
                None => m.clone(),
                Some(prev) => prev
                    .into_iter()
                    .filter_map(|(v, e)| {
                        let other = m.get(&v).copied().unwrap_or(0);
                        let min = e.min(other);
                        (min > 0).then_some((v, min))
                    })
                    .collect(),
            });
        }
        (content, mono.unwrap_or_default())
    }

    fn leading_coeff(&self) -> BigRational {
        self.terms
            .iter()
            .max_by(|(m1, _), (m2, _)| grlex(m1, m2))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut printed = false;
            if !mag.is_one() || m.is_empty() {
                write!(f, "{}", mag)?;
                printed = true;
            }
            for (v, e) in m {
                if printed {
                    write!(f, "*")?;
                }
                write!(f, "{}", v)?;
                if *e > 1 {
                    write!(f, "^{}", e)?;
                }
                printed = true;
            }
        }
        Ok(())
    }
}

/// Rational function numerator/denominator pair, normalized:
/// common monomial content removed, denominator leading coefficient positive,
/// exact quotients folded in when the division clears.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamRational {
    num: Poly,
    den: Poly,
}

impl ParamRational {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator in ParamRational");
        let mut pr = ParamRational { num, den };
        pr.normalize();
        pr
    }

    pub fn zero() -> Self {
        ParamRational { num: Poly::zero(), den: Poly::constant(BigRational::one()) }
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    pub fn from_i64(n: i64) -> Self {
        ParamRational { num: Poly::from_i64(n), den: Poly::constant(BigRational::one()) }
    }

    pub fn from_rational(c: BigRational) -> Self {
        ParamRational { num: Poly::constant(c), den: Poly::constant(BigRational::one()) }
    }

    pub fn var(name: &str) -> Self {
        ParamRational { num: Poly::var(name), den: Poly::constant(BigRational::one()) }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = Poly::constant(BigRational::one());
            return;
        }
        if let Some(q) = self.num.exact_div(&self.den) {
            self.num = q;
            self.den = Poly::constant(BigRational::one());
            return;
        }
        let (nc, nm) = self.num.monomial_content();
        let (dc, dm) = self.den.monomial_content();
        // common monomial factor
        let common: Monomial = nm
            .iter()
            .filter_map(|(v, e)| {
                let other = dm.get(v).copied().unwrap_or(0);
                let min = (*e).min(other);
                (min > 0).then(|| (v.clone(), min))
            })
            .collect();
        if !common.is_empty() || !nc.is_one() || !dc.is_one() {
            let mut strip = Poly::zero();
            strip.terms.insert(common, BigRational::one());
            self.num = self.num.exact_div(&strip.scale(&nc)).unwrap();
            self.den = self.den.exact_div(&strip.scale(&dc)).unwrap();
            // re-apply the rational contents so num/den keep integer-free form
            self.num = self.num.scale(&(nc.clone() / dc.clone()));
        }
        let lead = self.den.leading_coeff();
        if lead.is_negative() {
            self.num = self.num.neg();
            self.den = self.den.neg();
        }
        // normalize denominator leading coefficient to 1
        let lead = self.den.leading_coeff();
        if !lead.is_one() {
            let inv = BigRational::one() / lead;
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self == &ParamRational::one()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        let d = self.den.as_constant()?;
        let n = self.num.as_constant()?;
        Some(n / d)
    }

    /// Some(k) when the value is a constant integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        let c = self.as_constant()?;
        c.is_integer().then(|| c.to_integer())
    }

    pub fn add(&self, other: &ParamRational) -> ParamRational {
        ParamRational::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &ParamRational) -> ParamRational {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ParamRational {
        ParamRational { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &ParamRational) -> ParamRational {
        ParamRational::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &ParamRational) -> Option<ParamRational> {
        if other.is_zero() {
            return None;
        }
        Some(ParamRational::new(self.num.mul(&other.den), self.den.mul(&other.num)))
    }

    /// a/b = c/d decided by expanding a*d - c*b.
    pub fn equals(&self, other: &ParamRational) -> bool {
        self.num.mul(&other.den).sub(&other.num.mul(&self.den)).is_zero()
    }

    pub fn subst(&self, name: &str, value: &ParamRational) -> ParamRational {
        // num and den are polynomials; substituting a rational function means
        // clearing denominators afterwards
        let n = subst_poly_rational(&self.num, name, value);
        let d = subst_poly_rational(&self.den, name, value);
        ParamRational::new(n.num.mul(&d.den), n.den.mul(&d.num))
    }

    pub fn eval(&self, values: &BTreeMap<String, BigRational>) -> Option<BigRational> {
        let d = self.den.eval(values)?;
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(values)? / d)
    }

    /// Sign of the grlex-leading coefficient of the numerator; 0 for zero.
    pub fn canonical_sign(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        if self.num.leading_coeff().is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut vs = self.num.vars();
        for v in self.den.vars() {
            if !vs.contains(&v) {
                vs.push(v);
            }
        }
        vs.sort();
        vs
    }
}

fn subst_poly_rational(p: &Poly, name: &str, value: &ParamRational) -> ParamRational {
    let mut out = ParamRational::zero();
    for (m, c) in &p.terms {
        let mut piece = ParamRational::from_rational(c.clone());
        for (v, e) in m {
            if v == name {
                for _ in 0..*e {
                    piece = piece.mul(value);
                }
            } else {
                for _ in 0..*e {
                    piece = piece.mul(&ParamRational::var(v));
                }
            }
        }
        out = out.add(&piece);
    }
    out
}

impl fmt::Display for ParamRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            if self.num.terms.len() > 1 {
                write!(f, "({})", self.num)
            } else {
                write!(f, "{}", self.num)
            }
        } else {
            write!(f, "(({})/({}))", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n() -> Poly {
        Poly::var("n")
    }
    fn m() -> Poly {
        Poly::var("m")
    }

    #[test]
    fn poly_arith() {
        let p = n().add(&Poly::from_i64(1)); // n + 1
        let q = n().sub(&Poly::from_i64(1)); // n - 1
        let prod = p.mul(&q);
        assert_eq!(prod, n().mul(&n()).sub(&Poly::from_i64(1)));
    }

    #[test]
    fn exact_division() {
        let p = n().mul(&n()).sub(&Poly::from_i64(1));
        let q = n().add(&Poly::from_i64(1));
        assert_eq!(p.exact_div(&q), Some(n().sub(&Poly::from_i64(1))));
        assert_eq!(q.exact_div(&p), None);
    }

    #[test]
    fn rational_normalization() {
        // (n^2 - 1)/(n + 1) folds to n - 1
        let r = ParamRational::new(n().mul(&n()).sub(&Poly::from_i64(1)), n().add(&Poly::from_i64(1)));
        assert_eq!(r, ParamRational::new(n().sub(&Poly::from_i64(1)), Poly::from_i64(1)));
    }

    #[test]
    fn cross_multiplication_equality() {
        // n/(n+s) with s -> m - n equals n/m
        let s = ParamRational::var("s");
        let r = ParamRational::new(n(), n().add(&Poly::var("s")));
        let _ = s;
        let substituted = r.subst("s", &ParamRational::new(m().sub(&n()), Poly::from_i64(1)));
        assert!(substituted.equals(&ParamRational::new(n(), m())));
    }

    #[test]
    fn display_is_deterministic() {
        let r = ParamRational::new(n().add(&Poly::from_i64(2)), m());
        assert_eq!(format!("{}", r), format!("{}", r.clone()));
    }
}
