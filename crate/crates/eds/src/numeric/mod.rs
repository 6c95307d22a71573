//! Exact-to-float evaluation oracle used to cross-check symbolic identities
//! at random points. Symbolic zero implies numeric zero; the converse is
//! never assumed.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, ToPrimitive};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::EdsError;
use crate::scalar::{AssumptionSet, Coordinate, CoordKind, Parameter, ScalarExpr};

pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub struct EvalPoint {
    pub coords: BTreeMap<String, f64>,
    pub params: BTreeMap<String, BigRational>,
}

impl EvalPoint {
    fn coord_value(&self, c: &Coordinate) -> Result<f64, EdsError> {
        if let Some(v) = self.coords.get(&c.name) {
            return Ok(*v);
        }
        if let CoordKind::Aux { minuend, subtrahend } = &c.kind {
            let a = self
                .coords
                .get(minuend)
                .ok_or_else(|| EdsError::NumericDomain(format!("{} unassigned", minuend)))?;
            let b = self
                .coords
                .get(subtrahend)
                .ok_or_else(|| EdsError::NumericDomain(format!("{} unassigned", subtrahend)))?;
            return Ok(a - b);
        }
        Err(EdsError::NumericDomain(format!("coordinate {} unassigned", c.name)))
    }
}

/// Termwise evaluation; fractional exponents require positive bases.
pub fn eval(e: &ScalarExpr, p: &EvalPoint) -> Result<f64, EdsError> {
    let mut acc = 0.0f64;
    for t in e.terms() {
        let coeff = t
            .coeff
            .eval(&p.params)
            .ok_or_else(|| EdsError::NumericDomain("parameter unassigned or pole".into()))?;
        let mut v = coeff
            .to_f64()
            .ok_or_else(|| EdsError::NumericDomain("coefficient overflow".into()))?;
        for (c, exp) in &t.powers {
            let base = p.coord_value(c)?;
            let erat = exp
                .eval(&p.params)
                .ok_or_else(|| EdsError::NumericDomain("exponent unassigned or pole".into()))?;
            let ef = erat
                .to_f64()
                .ok_or_else(|| EdsError::NumericDomain("exponent overflow".into()))?;
            if base < 0.0 && !erat.is_integer() {
                return Err(EdsError::NumericDomain(format!(
                    "negative base {} for fractional exponent {}",
                    c, exp
                )));
            }
            if base == 0.0 && ef < 0.0 {
                return Err(EdsError::NumericDomain(format!("zero base {} with negative exponent", c)));
            }
            v *= if base < 0.0 {
                // integer exponent on a negative base
                let k = erat.to_integer().to_i64().unwrap_or(0);
                base.powi(k as i32)
            } else {
                base.powf(ef)
            };
        }
        acc += v;
    }
    Ok(acc)
}

/// Uniform rational in [1/2, 3/2] with denominator 1000.
fn sample_coord<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(500..=1500) as f64 / 1000.0
}

fn sample_param<R: Rng>(rng: &mut R) -> BigRational {
    BigRational::from(BigInt::from(rng.gen_range(2..=6)))
}

/// Sample a point assigning every coordinate and parameter appearing in the
/// expressions; auxiliary differences and fractional-power bases are kept
/// strictly positive, and parameters respect flags and disequalities.
pub fn sample_point<R: Rng>(
    exprs: &[&ScalarExpr],
    params: &[Parameter],
    assumptions: &AssumptionSet,
    rng: &mut R,
) -> EvalPoint {
    let mut point = EvalPoint::default();
    let mut aux_pairs: Vec<(String, String, String)> = Vec::new();
    for e in exprs {
        for c in e.coordinates() {
            if let CoordKind::Aux { minuend, subtrahend } = &c.kind {
                aux_pairs.push((c.name.clone(), minuend.clone(), subtrahend.clone()));
                point.coords.entry(subtrahend.clone()).or_insert_with(|| sample_coord(rng));
            } else {
                point.coords.entry(c.name.clone()).or_insert_with(|| sample_coord(rng));
            }
        }
        for t in e.terms() {
            let mut names = t.coeff.vars();
            for exp in t.powers.values() {
                names.extend(exp.vars());
            }
            for name in names {
                if !point.params.contains_key(&name) {
                    point.params.insert(name.clone(), sample_param(rng));
                }
            }
        }
    }
    for p in params {
        if !point.params.contains_key(&p.name) {
            point.params.insert(p.name.clone(), sample_param(rng));
        }
    }
    // auxiliary coordinate positive: aux in [1/2,3/2], minuend = aux + subtrahend
    for (aux, minuend, subtrahend) in aux_pairs {
        let v = sample_coord(rng);
        let sub = point.coords[&subtrahend];
        point.coords.insert(aux, v);
        point.coords.insert(minuend, v + sub);
    }
    // rejection for disequalities
    for _ in 0..64 {
        let bad = assumptions
            .disequalities
            .iter()
            .any(|d| d.eval(&point.params).map_or(false, |v| num::Zero::is_zero(&v)));
        if !bad {
            break;
        }
        for v in point.params.values_mut() {
            *v = sample_param(rng);
        }
    }
    point
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub pass: bool,
    pub trials: u32,
    pub seed: u64,
    pub tol: f64,
    pub worst_residual: f64,
    pub worst_point: Option<EvalPoint>,
}

/// Deterministic random-point comparison of two scalars at relative
/// tolerance `tol` with absolute floor 1e-12.
pub fn random_identity_check(
    lhs: &ScalarExpr,
    rhs: &ScalarExpr,
    params: &[Parameter],
    assumptions: &AssumptionSet,
    trials: u32,
    seed: u64,
    tol: f64,
) -> Result<CheckReport, EdsError> {
    let lhs = lhs.apply_assumptions(assumptions);
    let rhs = rhs.apply_assumptions(assumptions);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_point = None;
    let mut pass = true;
    for _ in 0..trials {
        let point = sample_point(&[&lhs, &rhs], params, assumptions, &mut rng);
        let l = eval(&lhs, &point)?;
        let r = eval(&rhs, &point)?;
        let scale = l.abs().max(r.abs()).max(ABS_FLOOR);
        let resid = (l - r).abs() / scale;
        if resid > worst {
            worst = resid;
            worst_point = Some(point.clone());
        }
        if resid > tol && (l - r).abs() > ABS_FLOOR {
            pass = false;
        }
    }
    Ok(CheckReport {
        pass,
        trials,
        seed,
        tol,
        worst_residual: worst,
        worst_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ParamRational, PowerMap};

    #[test]
    fn power_rule_value() {
        // n u^(n-1) at n=3, u=2 -> 12
        let n = ParamRational::var("n");
        let mut powers = PowerMap::new();
        powers.insert(Coordinate::fibre("u"), n.sub(&ParamRational::one()));
        let e = ScalarExpr::term(n, powers);
        let mut p = EvalPoint::default();
        p.coords.insert("u".into(), 2.0);
        p.params.insert("n".into(), BigRational::from(BigInt::from(3)));
        assert_eq!(eval(&e, &p).unwrap(), 12.0);
    }

    #[test]
    fn fractional_power_of_difference() {
        // (u-q)^(1/beta) at u=5, q=1, beta=2 -> 2
        let xi = Coordinate::aux("xi", "u", "q");
        let c = ParamRational::one().div(&ParamRational::var("beta")).unwrap();
        let mut powers = PowerMap::new();
        powers.insert(xi, c);
        let e = ScalarExpr::term(ParamRational::one(), powers);
        let mut p = EvalPoint::default();
        p.coords.insert("u".into(), 5.0);
        p.coords.insert("q".into(), 1.0);
        p.params.insert("beta".into(), BigRational::from(BigInt::from(2)));
        assert!((eval(&e, &p).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn negative_base_fractional_exponent_is_domain_error() {
        let xi = Coordinate::aux("xi", "u", "q");
        let c = ParamRational::one().div(&ParamRational::var("beta")).unwrap();
        let mut powers = PowerMap::new();
        powers.insert(xi, c);
        let e = ScalarExpr::term(ParamRational::one(), powers);
        let mut p = EvalPoint::default();
        p.coords.insert("u".into(), 1.0);
        p.coords.insert("q".into(), 5.0);
        p.params.insert("beta".into(), BigRational::from(BigInt::from(2)));
        assert!(eval(&e, &p).is_err());
    }

    #[test]
    fn identity_check_passes_and_fails() {
        let u = || ScalarExpr::var(Coordinate::fibre("u"));
        let q = || ScalarExpr::var(Coordinate::fibre("q"));
        let lhs = u().mul(&u()).sub(&q().mul(&q()));
        let rhs = u().sub(&q()).mul(&u().add(&q()));
        let r = random_identity_check(&lhs, &rhs, &[], &AssumptionSet::empty(), 20, 7, 1e-9).unwrap();
        assert!(r.pass, "worst {}", r.worst_residual);

        // u^n vs u^(n+1) must fail
        let n = ParamRational::var("n");
        let mut p1 = PowerMap::new();
        p1.insert(Coordinate::fibre("u"), n.clone());
        let mut p2 = PowerMap::new();
        p2.insert(Coordinate::fibre("u"), n.add(&ParamRational::one()));
        let lhs = ScalarExpr::term(ParamRational::one(), p1);
        let rhs = ScalarExpr::term(ParamRational::one(), p2);
        let r = random_identity_check(&lhs, &rhs, &[], &AssumptionSet::empty(), 20, 7, 1e-9).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn determinism_under_seed() {
        let u = || ScalarExpr::var(Coordinate::fibre("u"));
        let lhs = u().mul(&u());
        let rhs = u().mul(&u());
        let a = random_identity_check(&lhs, &rhs, &[], &AssumptionSet::empty(), 10, 42, 1e-9).unwrap();
        let b = random_identity_check(&lhs, &rhs, &[], &AssumptionSet::empty(), 10, 42, 1e-9).unwrap();
        assert_eq!(a.worst_residual, b.worst_residual);
    }
}
