//! Fraction field over the scalar ring, used only inside linear solves;
//! final certificate multipliers must clear back to plain scalars.

use crate::scalar::ScalarExpr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FracScalar {
    num: ScalarExpr,
    den: ScalarExpr,
}

impl FracScalar {
    pub fn zero() -> Self {
        FracScalar { num: ScalarExpr::zero(), den: ScalarExpr::one() }
    }

    pub fn one() -> Self {
        FracScalar { num: ScalarExpr::one(), den: ScalarExpr::one() }
    }

    pub fn from_scalar(e: ScalarExpr) -> Self {
        FracScalar { num: e, den: ScalarExpr::one() }
    }

    pub fn new(num: ScalarExpr, den: ScalarExpr) -> Self {
        assert!(!den.is_zero_syntactic(), "zero denominator");
        let mut f = FracScalar { num, den };
        f.normalize();
        f
    }

    fn normalize(&mut self) {
        if self.num.is_zero_syntactic() {
            self.den = ScalarExpr::one();
            return;
        }
        // single-term denominators divide in exactly
        if let Some(t) = self.den.as_single_term() {
            self.num = self.num.div_term(&t).expect("single-term division");
            self.den = ScalarExpr::one();
        }
    }

    pub fn is_zero(&self) -> bool {
        // negative powers folded in from single-term denominators can mask
        // cancellation in charts with an auxiliary coordinate
        self.num.is_zero_cleared()
    }

    pub fn num(&self) -> &ScalarExpr {
        &self.num
    }

    /// Some(scalar) when the denominator has cleared.
    pub fn as_scalar(&self) -> Option<ScalarExpr> {
        if self.den == ScalarExpr::one() {
            Some(self.num.clone())
        } else {
            None
        }
    }

    pub fn add(&self, other: &FracScalar) -> FracScalar {
        FracScalar::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &FracScalar) -> FracScalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FracScalar {
        FracScalar { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &FracScalar) -> FracScalar {
        FracScalar::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &FracScalar) -> Option<FracScalar> {
        if other.is_zero() {
            return None;
        }
        Some(FracScalar::new(
            self.num.mul(&other.den),
            self.den.mul(&other.num),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Coordinate;

    #[test]
    fn single_term_denominator_folds() {
        let u = ScalarExpr::var(Coordinate::fibre("u"));
        let f = FracScalar::new(u.mul(&u), u.clone());
        assert_eq!(f.as_scalar(), Some(u));
    }

    #[test]
    fn field_identities() {
        let u = ScalarExpr::var(Coordinate::fibre("u"));
        let q = ScalarExpr::var(Coordinate::fibre("q"));
        let s = FracScalar::from_scalar(u.add(&q));
        let r = s.div(&s).unwrap();
        assert_eq!(r.sub(&FracScalar::one()).is_zero(), true);
    }
}
