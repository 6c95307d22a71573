//! Exact symbolic scalars: sums of terms, each a rational-function
//! coefficient times a power product of coordinates with parameter-valued
//! exponents.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, ToPrimitive, Zero};

use super::coord::{Coordinate, CoordKind, Direction};
use super::poly::{ParamRational, Poly};
use crate::error::EdsError;

pub type PowerMap = BTreeMap<Coordinate, ParamRational>;

/// One monomial: coeff * prod coord^exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: ParamRational,
    pub powers: PowerMap,
}

impl Term {
    pub fn constant(coeff: ParamRational) -> Self {
        Term { coeff, powers: PowerMap::new() }
    }

    pub fn var(c: Coordinate) -> Self {
        let mut powers = PowerMap::new();
        powers.insert(c, ParamRational::one());
        Term { coeff: ParamRational::one(), powers }
    }
}

/// Canonical sum of terms; the empty sum is zero.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ScalarExpr {
    terms: BTreeMap<PowerMap, ParamRational>,
}

/// Three-valued verdict of an exact zero test under assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trivalent {
    Yes,
    No,
    Ambiguous,
}

/// Parameter equalities (used as substitutions) and disequalities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssumptionSet {
    /// expressions assumed identically zero
    pub equalities: Vec<ParamRational>,
    /// expressions assumed nonzero
    pub disequalities: Vec<ParamRational>,
    /// parameters flagged nonzero at declaration
    pub nonzero_params: Vec<String>,
}

impl AssumptionSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Solve each equality for a parameter occurring linearly with constant
    /// coefficient, in declaration order; later equalities see earlier
    /// substitutions.
    pub fn substitutions(&self) -> Vec<(String, ParamRational)> {
        let mut subs: Vec<(String, ParamRational)> = Vec::new();
        for eq in &self.equalities {
            let mut p = eq.clone();
            for (name, val) in &subs {
                p = p.subst(name, val);
            }
            let poly = p.numer().clone();
            if poly.is_zero() {
                continue;
            }
            let mut solved = None;
            for var in poly.vars() {
                if poly.degree_in(&var) == 1 {
                    if let Some(c) = poly.coeff_of(&var, 1).as_constant() {
                        let rest = poly.coeff_of(&var, 0);
                        let value = ParamRational::new(rest.neg(), Poly::constant(c));
                        solved = Some((var, value));
                        break;
                    }
                }
            }
            if let Some(s) = solved {
                subs.push(s);
            }
        }
        subs
    }

    fn apply_subs(&self, pr: &ParamRational, subs: &[(String, ParamRational)]) -> ParamRational {
        let mut out = pr.clone();
        for (name, val) in subs {
            out = out.subst(name, val);
        }
        out
    }

    /// Is the rational function provably nonzero under the disequalities and
    /// nonzero parameter flags?
    pub fn provably_nonzero(&self, pr: &ParamRational) -> bool {
        let subs = self.substitutions();
        let pr = self.apply_subs(pr, &subs);
        if pr.is_zero() {
            return false;
        }
        // pool of polynomials known nonzero
        let mut pool: Vec<Poly> = Vec::new();
        for d in &self.disequalities {
            pool.push(self.apply_subs(d, &subs).numer().clone());
        }
        for name in &self.nonzero_params {
            pool.push(Poly::var(name));
        }
        let mut p = pr.numer().clone();
        // strip known-nonzero factors until a constant remains
        loop {
            if p.as_constant().map_or(false, |c| !num::Zero::is_zero(&c)) {
                return true;
            }
            let mut reduced = false;
            for d in &pool {
                if d.as_constant().is_some() {
                    continue;
                }
                if let Some(q) = p.exact_div(d) {
                    if !q.is_zero() {
                        p = q;
                        reduced = true;
                        break;
                    }
                }
            }
            if !reduced {
                return false;
            }
        }
    }

    /// Zero test for a rational function under the assumptions.
    pub fn is_zero_param(&self, pr: &ParamRational) -> Trivalent {
        let subs = self.substitutions();
        let pr = self.apply_subs(pr, &subs);
        if pr.is_zero() {
            Trivalent::Yes
        } else if self.provably_nonzero(&pr) {
            Trivalent::No
        } else {
            Trivalent::Ambiguous
        }
    }

    pub fn merge(&self, other: &AssumptionSet) -> AssumptionSet {
        let mut out = self.clone();
        out.equalities.extend(other.equalities.iter().cloned());
        out.disequalities.extend(other.disequalities.iter().cloned());
        for n in &other.nonzero_params {
            if !out.nonzero_params.contains(n) {
                out.nonzero_params.push(n.clone());
            }
        }
        out
    }
}

impl ScalarExpr {
    pub fn zero() -> Self {
        ScalarExpr { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(ParamRational::one())
    }

    pub fn constant(c: ParamRational) -> Self {
        Self::from_terms(vec![Term::constant(c)])
    }

    pub fn from_i64(n: i64) -> Self {
        Self::constant(ParamRational::from_i64(n))
    }

    pub fn param(name: &str) -> Self {
        Self::constant(ParamRational::var(name))
    }

    pub fn var(c: Coordinate) -> Self {
        Self::from_terms(vec![Term::var(c)])
    }

    pub fn term(coeff: ParamRational, powers: PowerMap) -> Self {
        Self::from_terms(vec![Term { coeff, powers }])
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut out = ScalarExpr { terms: BTreeMap::new() };
        for t in terms {
            for nt in normalize_term(t) {
                out.insert(nt);
            }
        }
        out
    }

    fn insert(&mut self, t: Term) {
        if t.coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(t.powers).or_insert_with(ParamRational::zero);
        *entry = entry.add(&t.coeff);
        if entry.is_zero() {
            // re-fetch key: remove zero entries lazily
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn is_zero_syntactic(&self) -> bool {
        self.terms.is_empty()
    }

    /// Zero test that tolerates negative constant exponents. In charts with
    /// an auxiliary difference coordinate the normal form is only canonical
    /// when base-coordinate powers are non-negative; a factor like u^(-1)
    /// blocks cancellation against u-free terms. Multiply such exponents
    /// away (renormalizing each time) and retest.
    pub fn is_zero_cleared(&self) -> bool {
        let mut e = self.clone();
        for _ in 0..8 {
            if e.is_zero_syntactic() {
                return true;
            }
            let mut demand: BTreeMap<Coordinate, BigRational> = BTreeMap::new();
            for (powers, _) in &e.terms {
                for (c, p) in powers {
                    if let Some(k) = p.as_constant() {
                        if k < BigRational::zero() {
                            let need = (-k).ceil();
                            let slot = demand.entry(c.clone()).or_insert_with(BigRational::zero);
                            if need > *slot {
                                *slot = need;
                            }
                        }
                    }
                }
            }
            if demand.is_empty() {
                return false;
            }
            let mut powers = PowerMap::new();
            for (c, k) in demand {
                powers.insert(c, ParamRational::from_rational(k));
            }
            e = e.mul(&ScalarExpr::term(ParamRational::one(), powers));
        }
        false
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.terms
            .iter()
            .map(|(p, c)| Term { coeff: c.clone(), powers: p.clone() })
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Some(term) when the expression is a single monomial.
    pub fn as_single_term(&self) -> Option<Term> {
        if self.terms.len() == 1 {
            self.terms().next()
        } else {
            None
        }
    }

    pub fn as_param(&self) -> Option<ParamRational> {
        if self.is_zero_syntactic() {
            return Some(ParamRational::zero());
        }
        let t = self.as_single_term()?;
        t.powers.is_empty().then_some(t.coeff)
    }

    pub fn add(&self, other: &ScalarExpr) -> ScalarExpr {
        let mut out = self.clone();
        for t in other.terms() {
            out.insert(t);
        }
        out
    }

    pub fn neg(&self) -> ScalarExpr {
        ScalarExpr {
            terms: self.terms.iter().map(|(p, c)| (p.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &ScalarExpr) -> ScalarExpr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ScalarExpr) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for t1 in self.terms() {
            for t2 in other.terms() {
                let mut powers = t1.powers.clone();
                for (c, e) in &t2.powers {
                    let entry = powers.entry(c.clone()).or_insert_with(ParamRational::zero);
                    *entry = entry.add(e);
                }
                let t = Term { coeff: t1.coeff.mul(&t2.coeff), powers };
                for nt in normalize_term(t) {
                    out.insert(nt);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &ParamRational) -> ScalarExpr {
        self.mul(&ScalarExpr::constant(c.clone()))
    }

    pub fn pow_u(&self, k: u32) -> ScalarExpr {
        let mut acc = ScalarExpr::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact division by a single-term expression (exponent subtraction).
    pub fn div_term(&self, t: &Term) -> Option<ScalarExpr> {
        if t.coeff.is_zero() {
            return None;
        }
        let inv = ParamRational::one().div(&t.coeff)?;
        let mut out = ScalarExpr::zero();
        for mut term in self.terms() {
            for (c, e) in &t.powers {
                let entry = term.powers.entry(c.clone()).or_insert_with(ParamRational::zero);
                *entry = entry.sub(e);
            }
            term.coeff = term.coeff.mul(&inv);
            for nt in normalize_term(term) {
                out.insert(nt);
            }
        }
        Some(out)
    }

    /// Termwise power rule with chain rule through auxiliary coordinates.
    pub fn diff(&self, c: &Coordinate) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for t in self.terms() {
            for (k, e) in &t.powers {
                let grad = partial_of_coord(k, c);
                if grad == 0 {
                    continue;
                }
                let mut powers = t.powers.clone();
                let new_e = e.sub(&ParamRational::one());
                powers.insert(k.clone(), new_e);
                let coeff = t
                    .coeff
                    .mul(e)
                    .mul(&ParamRational::from_i64(grad));
                for nt in normalize_term(Term { coeff, powers }) {
                    out.insert(nt);
                }
            }
        }
        out
    }

    /// Total derivative in x or t: chain rule over fibre coordinates
    /// and their jets; parameters constant.
    pub fn total_diff(&self, dir: Direction) -> Result<ScalarExpr, EdsError> {
        let mut out = ScalarExpr::zero();
        for t in self.terms() {
            for (k, e) in &t.powers {
                // direct partial wrt the stored key (no aux chain rule here);
                // the chain is carried by d(k)/d(dir) below
                let dk = coord_total_derivative(k, dir)?;
                if dk.is_zero_syntactic() {
                    continue;
                }
                let mut powers = t.powers.clone();
                powers.insert(k.clone(), e.sub(&ParamRational::one()));
                let partial = ScalarExpr::term(t.coeff.mul(e), powers);
                out = out.add(&partial.mul(&dk));
            }
        }
        Ok(out)
    }

    /// Replace every occurrence c^e of `target` by replacement^e
    /// (single power-product replacement only).
    pub fn subst(&self, target: &Coordinate, replacement: &Term) -> Result<ScalarExpr, EdsError> {
        if replacement.powers.contains_key(target) {
            return Err(EdsError::UnsupportedSubstitution(format!(
                "replacement for {} contains {}",
                target, target
            )));
        }
        let mut out = ScalarExpr::zero();
        for t in self.terms() {
            let mut powers = t.powers.clone();
            let mut coeff = t.coeff.clone();
            if let Some(e) = powers.remove(target) {
                // coeff of replacement raised to the exponent
                if !replacement.coeff.is_one() {
                    if let Some(k) = e.as_integer() {
                        let k = k.to_i64().ok_or_else(|| {
                            EdsError::UnsupportedSubstitution("exponent overflow".into())
                        })?;
                        coeff = coeff.mul(&pow_param(&replacement.coeff, k)?);
                    } else {
                        return Err(EdsError::UnsupportedSubstitution(format!(
                            "cannot raise coefficient {} to symbolic exponent {}",
                            replacement.coeff, e
                        )));
                    }
                }
                for (c, re) in &replacement.powers {
                    let entry = powers.entry(c.clone()).or_insert_with(ParamRational::zero);
                    *entry = entry.add(&re.mul(&e));
                }
            }
            for nt in normalize_term(Term { coeff, powers }) {
                out.insert(nt);
            }
        }
        Ok(out)
    }

    /// Replace a fibre coordinate (and its jets) by an arbitrary expression;
    /// the coordinate must occur with nonnegative integer exponents only.
    pub fn subst_fibre(&self, target: &str, replacement: &ScalarExpr) -> Result<ScalarExpr, EdsError> {
        // precompute the jets of the replacement lazily
        let mut jets: BTreeMap<(u8, u8), ScalarExpr> = BTreeMap::new();
        jets.insert((0, 0), replacement.clone());
        let mut out = ScalarExpr::zero();
        for t in self.terms() {
            let mut rest = Term { coeff: t.coeff.clone(), powers: PowerMap::new() };
            let mut factor = ScalarExpr::one();
            for (k, e) in &t.powers {
                let ord = match &k.kind {
                    CoordKind::Fibre if k.name == target => Some((0u8, 0u8)),
                    CoordKind::Jet { base, xs, ts } if base == target => Some((*xs, *ts)),
                    _ => None,
                };
                match ord {
                    None => {
                        rest.powers.insert(k.clone(), e.clone());
                    }
                    Some((xs, ts)) => {
                        let exp = e
                            .as_integer()
                            .and_then(|k| k.to_i64())
                            .filter(|k| *k >= 0)
                            .ok_or_else(|| {
                                EdsError::UnsupportedSubstitution(format!(
                                    "{} occurs with non-integer exponent {}",
                                    k, e
                                ))
                            })?;
                        let r = jet_of(&mut jets, xs, ts)?;
                        factor = factor.mul(&r.pow_u(exp as u32));
                    }
                }
            }
            out = out.add(&ScalarExpr::from_terms(vec![rest]).mul(&factor));
        }
        Ok(out)
    }

    /// Apply the equality substitutions of an assumption set to coefficients
    /// and exponents, then renormalize (merging newly equal power maps).
    pub fn apply_assumptions(&self, a: &AssumptionSet) -> ScalarExpr {
        let subs = a.substitutions();
        if subs.is_empty() {
            return self.clone();
        }
        let mut out = ScalarExpr::zero();
        for t in self.terms() {
            let mut coeff = t.coeff.clone();
            for (name, val) in &subs {
                coeff = coeff.subst(name, val);
            }
            let mut powers = PowerMap::new();
            for (c, e) in &t.powers {
                let mut e = e.clone();
                for (name, val) in &subs {
                    e = e.subst(name, val);
                }
                powers.insert(c.clone(), e);
            }
            for nt in normalize_term(Term { coeff, powers }) {
                out.insert(nt);
            }
        }
        out
    }

    /// Exact zero test under assumptions.
    pub fn is_zero(&self, a: &AssumptionSet) -> Trivalent {
        let e = self.apply_assumptions(a);
        if e.is_zero_syntactic() {
            return Trivalent::Yes;
        }
        for t in e.terms() {
            if a.provably_nonzero(&t.coeff) {
                return Trivalent::No;
            }
        }
        Trivalent::Ambiguous
    }

    /// Partition by the exponent of coordinate `c`; exponents must be
    /// pairwise decidably distinct under the assumptions.
    pub fn group_by_power(
        &self,
        c: &Coordinate,
        a: &AssumptionSet,
    ) -> Result<Vec<(ParamRational, ScalarExpr)>, EdsError> {
        let e = self.apply_assumptions(a);
        let mut groups: Vec<(ParamRational, ScalarExpr)> = Vec::new();
        for t in e.terms() {
            let exp = t.powers.get(c).cloned().unwrap_or_else(ParamRational::zero);
            let mut rest = t.clone();
            rest.powers.remove(c);
            let mut found = None;
            for (i, (g, _)) in groups.iter().enumerate() {
                match a.is_zero_param(&exp.sub(g)) {
                    Trivalent::Yes => {
                        found = Some(i);
                        break;
                    }
                    Trivalent::No => {}
                    Trivalent::Ambiguous => {
                        return Err(EdsError::CaseSplit {
                            difference: format!("{}", exp.sub(g)),
                        });
                    }
                }
            }
            let piece = ScalarExpr::from_terms(vec![rest]);
            match found {
                Some(i) => groups[i].1 = groups[i].1.add(&piece),
                None => groups.push((exp, piece)),
            }
        }
        groups.retain(|(_, coeff)| !coeff.is_zero_syntactic());
        groups.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(groups)
    }

    /// All coordinates appearing in the expression.
    pub fn coordinates(&self) -> Vec<Coordinate> {
        let mut out: Vec<Coordinate> = Vec::new();
        for p in self.terms.keys() {
            for c in p.keys() {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out.sort();
        out
    }

    /// Maximum jet order appearing.
    pub fn max_jet_order(&self) -> u8 {
        self.coordinates().iter().map(|c| c.jet_order()).max().unwrap_or(0)
    }
}

fn pow_param(base: &ParamRational, k: i64) -> Result<ParamRational, EdsError> {
    let mut acc = ParamRational::one();
    for _ in 0..k.unsigned_abs() {
        acc = acc.mul(base);
    }
    if k < 0 {
        acc = ParamRational::one()
            .div(&acc)
            .ok_or_else(|| EdsError::UnsupportedSubstitution("division by zero".into()))?;
    }
    Ok(acc)
}

fn jet_of(
    jets: &mut BTreeMap<(u8, u8), ScalarExpr>,
    xs: u8,
    ts: u8,
) -> Result<ScalarExpr, EdsError> {
    if let Some(e) = jets.get(&(xs, ts)) {
        return Ok(e.clone());
    }
    let prev = if xs > 0 {
        let p = jet_of(jets, xs - 1, ts)?;
        p.total_diff(Direction::X)?
    } else {
        let p = jet_of(jets, xs, ts - 1)?;
        p.total_diff(Direction::T)?
    };
    jets.insert((xs, ts), prev.clone());
    Ok(prev)
}

/// d(key)/d(c) for the partial-derivative chain rule: 1 for the coordinate
/// itself, +/-1 through an auxiliary difference coordinate.
fn partial_of_coord(key: &Coordinate, c: &Coordinate) -> i64 {
    if key == c {
        return 1;
    }
    if let CoordKind::Aux { minuend, subtrahend } = &key.kind {
        if minuend == &c.name {
            return 1;
        }
        if subtrahend == &c.name {
            return -1;
        }
    }
    0
}

/// Total derivative of a single coordinate in the given direction.
fn coord_total_derivative(c: &Coordinate, dir: Direction) -> Result<ScalarExpr, EdsError> {
    match &c.kind {
        CoordKind::Independent => Ok(match (c.name.as_str(), dir) {
            ("x", Direction::X) | ("t", Direction::T) => ScalarExpr::one(),
            _ => ScalarExpr::zero(),
        }),
        CoordKind::Fibre | CoordKind::Jet { .. } => {
            let succ = c
                .jet_successor(dir)
                .ok_or_else(|| EdsError::JetOverflow { coordinate: c.name.clone() })?;
            Ok(ScalarExpr::var(succ))
        }
        CoordKind::Aux { minuend, subtrahend } => {
            let a = Coordinate::fibre(minuend).jet_successor(dir).unwrap();
            let b = Coordinate::fibre(subtrahend).jet_successor(dir).unwrap();
            Ok(ScalarExpr::var(a).sub(&ScalarExpr::var(b)))
        }
    }
}

/// Canonicalize a single term:
///  - drop zero exponents and zero coefficients;
///  - expand aux^k for nonnegative integer k into the defining difference;
///  - inside a term carrying a fractional/negative aux power, rewrite the
///    minuend coordinate via minuend = aux + subtrahend so equal scalars get
///    equal normal forms.
fn normalize_term(t: Term) -> Vec<Term> {
    let coeff = t.coeff;
    if coeff.is_zero() {
        return Vec::new();
    }
    let mut powers = PowerMap::new();
    let mut int_aux: Vec<(Coordinate, i64)> = Vec::new();
    let mut opaque_aux: Vec<(Coordinate, ParamRational)> = Vec::new();
    for (c, e) in t.powers {
        if e.is_zero() {
            continue;
        }
        if let CoordKind::Aux { .. } = &c.kind {
            match e.as_integer().and_then(|k| k.to_i64()) {
                Some(k) if k >= 0 => int_aux.push((c, k)),
                _ => opaque_aux.push((c, e)),
            }
        } else {
            powers.insert(c, e);
        }
    }
    // a fractional (or negative) aux power forces the minuend out of the
    // same term: minuend^k aux^e -> sum_j C(k,j) subtrahend^(k-j) aux^(e+j),
    // merging into the aux exponent so the rewrite cannot reintroduce an
    // integer aux power
    let mut partials: Vec<Term> = vec![Term { coeff, powers }];
    for (aux, e) in opaque_aux {
        let (min_coord, sub_coord) = match &aux.kind {
            CoordKind::Aux { minuend, subtrahend } => {
                (Coordinate::fibre(minuend), Coordinate::fibre(subtrahend))
            }
            _ => unreachable!(),
        };
        let mut next = Vec::new();
        for mut p in partials {
            let k = p
                .powers
                .get(&min_coord)
                .and_then(|me| me.as_integer())
                .and_then(|k| k.to_i64())
                .filter(|k| *k >= 0);
            match k {
                Some(k) => {
                    p.powers.remove(&min_coord);
                    let mut binom = num::BigInt::from(1);
                    for j in 0..=k {
                        let mut q = p.clone();
                        q.coeff = q.coeff.mul(&ParamRational::from_rational(
                            num::BigRational::from(binom.clone()),
                        ));
                        merge_power(&mut q.powers, aux.clone(), e.add(&ParamRational::from_i64(j)));
                        if k - j > 0 {
                            merge_power(&mut q.powers, sub_coord.clone(), ParamRational::from_i64(k - j));
                        }
                        next.push(q);
                        binom = binom * (k - j) / (j + 1);
                    }
                }
                None => {
                    merge_power(&mut p.powers, aux.clone(), e.clone());
                    next.push(p);
                }
            }
        }
        partials = next;
    }
    // integer aux powers expand into the defining difference (fibre
    // coordinates only, so the product below renormalizes without looping)
    let mut out = Vec::new();
    for p in partials {
        if p.coeff.is_zero() {
            continue;
        }
        if int_aux.is_empty() {
            out.push(p);
        } else {
            let mut acc = ScalarExpr::term(p.coeff, p.powers);
            for (c, k) in &int_aux {
                acc = acc.mul(&aux_difference(c).pow_u(*k as u32));
            }
            out.extend(acc.terms());
        }
    }
    out
}

fn merge_power(powers: &mut PowerMap, c: Coordinate, e: ParamRational) {
    let merged = match powers.remove(&c) {
        Some(old) => old.add(&e),
        None => e,
    };
    if !merged.is_zero() {
        powers.insert(c, merged);
    }
}

fn aux_difference(c: &Coordinate) -> ScalarExpr {
    if let CoordKind::Aux { minuend, subtrahend } = &c.kind {
        ScalarExpr::var(Coordinate::fibre(minuend)).sub(&ScalarExpr::var(Coordinate::fibre(subtrahend)))
    } else {
        unreachable!("aux_difference on non-aux coordinate")
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero_syntactic() {
            return write!(f, "0");
        }
        let mut first = true;
        for (powers, coeff) in &self.terms {
            if first {
                first = false;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{}", coeff)?;
            for (c, e) in powers {
                write!(f, "*{}", c)?;
                if !e.is_one() {
                    write!(f, "^({})", e)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Coordinate {
        Coordinate::fibre("u")
    }
    fn q() -> Coordinate {
        Coordinate::fibre("q")
    }
    fn p() -> Coordinate {
        Coordinate::fibre("p")
    }

    fn pr(n: i64) -> ParamRational {
        ParamRational::from_i64(n)
    }

    #[test]
    fn additive_inverse() {
        let e = ScalarExpr::var(u()).add(&ScalarExpr::var(u()).neg());
        assert!(e.is_zero_syntactic());
    }

    #[test]
    fn difference_of_squares() {
        let lhs = ScalarExpr::var(u())
            .sub(&ScalarExpr::var(q()))
            .mul(&ScalarExpr::var(u()).add(&ScalarExpr::var(q())));
        let rhs = ScalarExpr::var(u())
            .mul(&ScalarExpr::var(u()))
            .sub(&ScalarExpr::var(q()).mul(&ScalarExpr::var(q())));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn exponent_addition_with_parameters() {
        // n*u^(n-1) * u = n*u^n
        let n = ParamRational::var("n");
        let mut powers = PowerMap::new();
        powers.insert(u(), n.sub(&pr(1)));
        let lhs = ScalarExpr::term(n.clone(), powers).mul(&ScalarExpr::var(u()));
        let mut powers = PowerMap::new();
        powers.insert(u(), n.clone());
        let rhs = ScalarExpr::term(n, powers);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn power_rule() {
        // d/du u^(n+1) = (n+1) u^n
        let n1 = ParamRational::var("n").add(&pr(1));
        let mut powers = PowerMap::new();
        powers.insert(u(), n1.clone());
        let e = ScalarExpr::term(ParamRational::one(), powers);
        let d = e.diff(&u());
        let mut powers = PowerMap::new();
        powers.insert(u(), ParamRational::var("n"));
        assert_eq!(d, ScalarExpr::term(n1, powers));
    }

    #[test]
    fn partial_of_independent_coordinate() {
        assert!(ScalarExpr::var(q()).diff(&p()).is_zero_syntactic());
    }

    #[test]
    fn a_profile_third_order_ode() {
        // A = kappa + sigma*u + u^(n+1) satisfies u A_uuu - (n-1) A_uu = 0
        let n1 = ParamRational::var("n").add(&pr(1));
        let mut powers = PowerMap::new();
        powers.insert(u(), n1);
        let a = ScalarExpr::constant(ParamRational::var("kappa"))
            .add(&ScalarExpr::constant(ParamRational::var("sigma")).mul(&ScalarExpr::var(u())))
            .add(&ScalarExpr::term(ParamRational::one(), powers));
        let a_uu = a.diff(&u()).diff(&u());
        let a_uuu = a_uu.diff(&u());
        let lhs = ScalarExpr::var(u())
            .mul(&a_uuu)
            .sub(&ScalarExpr::constant(ParamRational::var("n").sub(&pr(1))).mul(&a_uu));
        assert!(lhs.is_zero_syntactic());
    }

    #[test]
    fn total_diff_chain_rule() {
        // D_x(u^2) = 2 u u_x
        let e = ScalarExpr::var(u()).mul(&ScalarExpr::var(u()));
        let d = e.total_diff(Direction::X).unwrap();
        let expect = ScalarExpr::from_i64(2)
            .mul(&ScalarExpr::var(u()))
            .mul(&ScalarExpr::var(Coordinate::jet("u", 1, 0)));
        assert_eq!(d, expect);
    }

    #[test]
    fn mixed_totals_commute() {
        let e = ScalarExpr::var(u()).mul(&ScalarExpr::var(p()));
        let dxt = e.total_diff(Direction::X).unwrap().total_diff(Direction::T).unwrap();
        let dtx = e.total_diff(Direction::T).unwrap().total_diff(Direction::X).unwrap();
        assert_eq!(dxt, dtx);
    }

    #[test]
    fn jet_overflow_is_an_error() {
        let e = ScalarExpr::var(Coordinate::jet("u", 3, 0));
        match e.total_diff(Direction::X) {
            Err(EdsError::JetOverflow { coordinate }) => assert_eq!(coordinate, "u_xxx"),
            other => panic!("expected jet overflow, got {:?}", other),
        }
    }

    #[test]
    fn subst_power_product() {
        // subst(u^(n+1), u, y_x^(1/(n+1))) = y_x
        let n1 = ParamRational::var("n").add(&pr(1));
        let mut powers = PowerMap::new();
        powers.insert(u(), n1.clone());
        let e = ScalarExpr::term(ParamRational::one(), powers);
        let yx = Coordinate::jet("y", 1, 0);
        let mut rp = PowerMap::new();
        rp.insert(yx.clone(), ParamRational::one().div(&n1).unwrap());
        let replacement = Term { coeff: ParamRational::one(), powers: rp };
        let out = e.subst(&u(), &replacement).unwrap();
        assert_eq!(out, ScalarExpr::var(yx));
    }

    #[test]
    fn subst_absent_coordinate() {
        let e = ScalarExpr::var(p());
        let out = e.subst(&u(), &Term::var(q())).unwrap();
        assert_eq!(out, ScalarExpr::var(p()));
    }

    #[test]
    fn subst_exponent_product() {
        // subst(u^m, u, y_x^(1/(n+1))) = y_x^(m/(n+1))
        let m = ParamRational::var("m");
        let n1 = ParamRational::var("n").add(&pr(1));
        let mut powers = PowerMap::new();
        powers.insert(u(), m.clone());
        let e = ScalarExpr::term(ParamRational::one(), powers);
        let yx = Coordinate::jet("y", 1, 0);
        let mut rp = PowerMap::new();
        rp.insert(yx.clone(), ParamRational::one().div(&n1).unwrap());
        let out = e.subst(&u(), &Term { coeff: ParamRational::one(), powers: rp }).unwrap();
        let mut expect = PowerMap::new();
        expect.insert(yx, m.div(&n1).unwrap());
        assert_eq!(out, ScalarExpr::term(ParamRational::one(), expect));
    }

    #[test]
    fn is_zero_under_assumptions() {
        let m = ParamRational::var("m");
        let n = ParamRational::var("n");
        let s = ParamRational::var("s");
        // is_zero(m - n, {m != n}) -> no
        let a = AssumptionSet {
            disequalities: vec![m.sub(&n)],
            ..Default::default()
        };
        assert_eq!(
            ScalarExpr::constant(m.sub(&n)).is_zero(&a),
            Trivalent::No
        );
        // is_zero((n+s) - m, {s = m - n}) -> yes
        let a = AssumptionSet {
            equalities: vec![s.sub(&m.sub(&n))],
            ..Default::default()
        };
        assert_eq!(
            ScalarExpr::constant(n.add(&s).sub(&m)).is_zero(&a),
            Trivalent::Yes
        );
        // is_zero(n - 1, {}) -> ambiguous
        assert_eq!(
            ScalarExpr::constant(n.sub(&ParamRational::one())).is_zero(&AssumptionSet::empty()),
            Trivalent::Ambiguous
        );
    }

    #[test]
    fn group_by_power_of_zero() {
        let groups = ScalarExpr::zero().group_by_power(&u(), &AssumptionSet::empty()).unwrap();
        assert!(groups.is_empty());
    }

    #[test]
    fn aux_integer_power_expands() {
        let xi = Coordinate::aux("xi", "u", "q");
        let e = ScalarExpr::var(xi); // xi^1 expands to u - q
        assert_eq!(e, ScalarExpr::var(u()).sub(&ScalarExpr::var(q())));
    }

    #[test]
    fn aux_fractional_normal_form() {
        // u * xi^(c-1) and xi^c + q*xi^(c-1) must normalize identically
        let xi = Coordinate::aux("xi", "u", "q");
        let c = ParamRational::one().div(&ParamRational::var("beta")).unwrap();
        let cm1 = c.sub(&ParamRational::one());
        let mut powers = PowerMap::new();
        powers.insert(xi.clone(), cm1.clone());
        powers.insert(u(), ParamRational::one());
        let lhs = ScalarExpr::term(ParamRational::one(), powers);
        let mut p1 = PowerMap::new();
        p1.insert(xi.clone(), c);
        let mut p2 = PowerMap::new();
        p2.insert(xi, cm1);
        p2.insert(q(), ParamRational::one());
        let rhs = ScalarExpr::term(ParamRational::one(), p1)
            .add(&ScalarExpr::term(ParamRational::one(), p2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn aux_partial_derivatives() {
        // d/du xi^c = c xi^(c-1), d/dq xi^c = -c xi^(c-1)
        let xi = Coordinate::aux("xi", "u", "q");
        let c = ParamRational::one().div(&ParamRational::var("beta")).unwrap();
        let mut powers = PowerMap::new();
        powers.insert(xi.clone(), c.clone());
        let e = ScalarExpr::term(ParamRational::one(), powers);
        let du = e.diff(&u());
        let dq = e.diff(&q());
        assert_eq!(du, dq.neg());
        let mut expect = PowerMap::new();
        expect.insert(xi, c.sub(&ParamRational::one()));
        assert_eq!(du, ScalarExpr::term(c, expect));
    }
}
