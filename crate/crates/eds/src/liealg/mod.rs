//! Free Lie algebra on named generators with a partial bracket table.
//! Brackets of pairs the table does not cover stay as formal basis
//! elements, so every computation remains exact and auditable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::EdsError;
use crate::scalar::{AssumptionSet, ScalarExpr, Trivalent};

/// Basis element: a generator or a formal bracket, kept in the canonical
/// orientation `left < right` (swaps are absorbed into coefficients).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasisElem {
    Gen(String),
    Bracket(Box<BasisElem>, Box<BasisElem>),
}

impl BasisElem {
    pub fn gen(name: &str) -> Self {
        BasisElem::Gen(name.to_string())
    }

    /// Canonical formal bracket; returns (elem, sign), or None for [a,a].
    pub fn formal(a: BasisElem, b: BasisElem) -> Option<(BasisElem, i8)> {
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => Some((BasisElem::Bracket(Box::new(a), Box::new(b)), 1)),
            std::cmp::Ordering::Greater => Some((BasisElem::Bracket(Box::new(b), Box::new(a)), -1)),
        }
    }

    pub fn generators(&self, out: &mut BTreeSet<String>) {
        match self {
            BasisElem::Gen(g) => {
                out.insert(g.clone());
            }
            BasisElem::Bracket(a, b) => {
                a.generators(out);
                b.generators(out);
            }
        }
    }

    pub fn is_formal(&self) -> bool {
        matches!(self, BasisElem::Bracket(_, _))
    }
}

impl fmt::Display for BasisElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisElem::Gen(g) => write!(f, "{}", g),
            BasisElem::Bracket(a, b) => write!(f, "[{}, {}]", a, b),
        }
    }
}

/// Finite linear combination of basis elements with scalar coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LieExpr {
    terms: BTreeMap<BasisElem, ScalarExpr>,
}

impl LieExpr {
    pub fn zero() -> Self {
        LieExpr { terms: BTreeMap::new() }
    }

    pub fn gen(name: &str) -> Self {
        LieExpr::single(BasisElem::gen(name), ScalarExpr::one())
    }

    pub fn single(b: BasisElem, c: ScalarExpr) -> Self {
        let mut e = LieExpr::zero();
        e.insert(b, c);
        e
    }

    pub fn insert(&mut self, b: BasisElem, c: ScalarExpr) {
        let entry = self.terms.entry(b).or_insert_with(ScalarExpr::zero);
        *entry = entry.add(&c);
        self.terms.retain(|_, v| !v.is_zero_syntactic());
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisElem, &ScalarExpr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, b: &BasisElem) -> ScalarExpr {
        self.terms.get(b).cloned().unwrap_or_else(ScalarExpr::zero)
    }

    pub fn is_zero_syntactic(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &LieExpr) -> LieExpr {
        let mut r = self.clone();
        for (b, c) in &other.terms {
            r.insert(b.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> LieExpr {
        LieExpr {
            terms: self.terms.iter().map(|(b, c)| (b.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &LieExpr) -> LieExpr {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &ScalarExpr) -> LieExpr {
        if s.is_zero_syntactic() {
            return LieExpr::zero();
        }
        let mut r = LieExpr::zero();
        for (b, c) in &self.terms {
            r.insert(b.clone(), c.mul(s));
        }
        r
    }

    pub fn apply_assumptions(&self, a: &AssumptionSet) -> LieExpr {
        let mut r = LieExpr::zero();
        for (b, c) in &self.terms {
            r.insert(b.clone(), c.apply_assumptions(a));
        }
        r
    }

    /// Zero test: Yes iff every coefficient is provably zero; No if some
    /// coefficient is provably nonzero; otherwise Ambiguous.
    pub fn is_zero(&self, a: &AssumptionSet) -> Trivalent {
        let mut verdict = Trivalent::Yes;
        for c in self.terms.values() {
            match c.is_zero(a) {
                Trivalent::Yes => {}
                Trivalent::No => return Trivalent::No,
                Trivalent::Ambiguous => verdict = Trivalent::Ambiguous,
            }
        }
        verdict
    }

    pub fn generators(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for b in self.terms.keys() {
            b.generators(&mut out);
        }
        out
    }

    pub fn has_formal(&self) -> bool {
        self.terms.keys().any(|b| b.is_formal())
    }
}

impl fmt::Display for LieExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (b, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}) {}", c, b)?;
        }
        Ok(())
    }
}

/// Partial bracket table on generator pairs. Keys are stored with the
/// smaller generator first; the right-hand side may itself contain formal
/// brackets of generators.
#[derive(Debug, Clone, Default)]
pub struct RelationTable {
    pub name: String,
    entries: BTreeMap<(String, String), LieExpr>,
    generators: BTreeSet<String>,
}

impl RelationTable {
    pub fn new(name: &str) -> Self {
        RelationTable {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn declare_generator(&mut self, g: &str) {
        self.generators.insert(g.to_string());
    }

    /// Declare [a, b] = rhs (sign-adjusted into canonical order).
    pub fn set(&mut self, a: &str, b: &str, rhs: LieExpr) {
        self.generators.insert(a.to_string());
        self.generators.insert(b.to_string());
        self.generators.extend(rhs.generators());
        if a <= b {
            self.entries.insert((a.to_string(), b.to_string()), rhs);
        } else {
            self.entries.insert((b.to_string(), a.to_string()), rhs.neg());
        }
    }

    pub fn generators(&self) -> &BTreeSet<String> {
        &self.generators
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(String, String), &LieExpr)> {
        self.entries.iter()
    }

    /// Bracket of two generators: declared value, or a formal bracket.
    pub fn bracket_gens(&self, a: &str, b: &str) -> LieExpr {
        if a == b {
            return LieExpr::zero();
        }
        let (key, sign) = if a < b {
            ((a.to_string(), b.to_string()), 1i8)
        } else {
            ((b.to_string(), a.to_string()), -1i8)
        };
        let val = match self.entries.get(&key) {
            Some(v) => v.clone(),
            None => LieExpr::single(
                BasisElem::Bracket(Box::new(BasisElem::gen(&key.0)), Box::new(BasisElem::gen(&key.1))),
                ScalarExpr::one(),
            ),
        };
        if sign < 0 {
            val.neg()
        } else {
            val
        }
    }

    fn bracket_basis(&self, a: &BasisElem, b: &BasisElem) -> LieExpr {
        match (a, b) {
            (BasisElem::Gen(x), BasisElem::Gen(y)) => self.bracket_gens(x, y),
            _ => match BasisElem::formal(a.clone(), b.clone()) {
                None => LieExpr::zero(),
                Some((e, s)) => {
                    let c = if s < 0 { ScalarExpr::from_i64(-1) } else { ScalarExpr::one() };
                    LieExpr::single(e, c)
                }
            },
        }
    }

    /// Bilinear bracket resolved through the table. Formal brackets in the
    /// intermediate result are re-expanded once in case the table resolves
    /// them (e.g. an RHS citing another declared pair).
    pub fn bracket(&self, a: &LieExpr, b: &LieExpr) -> LieExpr {
        let mut out = LieExpr::zero();
        for (ba, ca) in a.terms() {
            for (bb, cb) in b.terms() {
                let piece = self.bracket_basis(ba, bb);
                for (e, c) in piece.terms() {
                    out.insert(e.clone(), c.mul(ca).mul(cb));
                }
            }
        }
        self.resolve(&out)
    }

    /// Replace any formal bracket of two generators that the table in fact
    /// declares; iterated until stable.
    pub fn resolve(&self, e: &LieExpr) -> LieExpr {
        let mut cur = e.clone();
        for _ in 0..8 {
            let mut next = LieExpr::zero();
            let mut changed = false;
            for (b, c) in cur.terms() {
                match b {
                    BasisElem::Bracket(x, y) => {
                        if let (BasisElem::Gen(gx), BasisElem::Gen(gy)) = (x.as_ref(), y.as_ref()) {
                            if self.entries.contains_key(&(gx.clone(), gy.clone())) {
                                let v = self.bracket_gens(gx, gy).scale(c);
                                next = next.add(&v);
                                changed = true;
                                continue;
                            }
                        }
                        next.insert(b.clone(), c.clone());
                    }
                    _ => next.insert(b.clone(), c.clone()),
                }
            }
            cur = next;
            if !changed {
                break;
            }
        }
        cur
    }
}

#[derive(Debug, Clone)]
pub struct JacobiViolation {
    pub triple: (String, String, String),
    pub residual: LieExpr,
}

#[derive(Debug, Clone, Default)]
pub struct JacobiAudit {
    pub violations: Vec<JacobiViolation>,
    pub undecidable: Vec<JacobiViolation>,
    pub triples_checked: usize,
}

impl JacobiAudit {
    pub fn pass(&self) -> bool {
        self.violations.is_empty() && self.undecidable.is_empty()
    }
}

/// Check the Jacobi identity on every generator triple. Triples whose
/// residual contains an unresolved formal bracket, or whose vanishing the
/// assumptions cannot decide, are reported as undecidable.
pub fn jacobi_audit(table: &RelationTable, assumptions: &AssumptionSet) -> JacobiAudit {
    let gens: Vec<String> = table.generators().iter().cloned().collect();
    let mut audit = JacobiAudit::default();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            for k in (j + 1)..gens.len() {
                let (a, b, c) = (&gens[i], &gens[j], &gens[k]);
                let ea = LieExpr::gen(a);
                let eb = LieExpr::gen(b);
                let ec = LieExpr::gen(c);
                let j1 = table.bracket(&table.bracket(&ea, &eb), &ec);
                let j2 = table.bracket(&table.bracket(&eb, &ec), &ea);
                let j3 = table.bracket(&table.bracket(&ec, &ea), &eb);
                let resid = j1.add(&j2).add(&j3).apply_assumptions(assumptions);
                audit.triples_checked += 1;
                if resid.is_zero_syntactic() {
                    continue;
                }
                let rec = JacobiViolation {
                    triple: (a.clone(), b.clone(), c.clone()),
                    residual: resid.clone(),
                };
                if resid.has_formal() {
                    // a coefficient on a formal bracket may still vanish
                    let formal_live = resid.terms().any(|(b, c)| {
                        b.is_formal() && c.is_zero(assumptions) != Trivalent::Yes
                    });
                    if formal_live {
                        audit.undecidable.push(rec);
                        continue;
                    }
                }
                match resid.is_zero(assumptions) {
                    Trivalent::Yes => {}
                    Trivalent::No => audit.violations.push(rec),
                    Trivalent::Ambiguous => audit.undecidable.push(rec),
                }
            }
        }
    }
    audit
}

/// Generator images for a realization: each generator maps to a scalar
/// multiple of a generator, or to zero.
#[derive(Debug, Clone, Default)]
pub struct Realization {
    images: BTreeMap<String, LieExpr>,
}

impl Realization {
    pub fn new() -> Self {
        Realization::default()
    }

    pub fn set(&mut self, g: &str, image: LieExpr) {
        self.images.insert(g.to_string(), image);
    }

    /// Image of a generator, followed through chained definitions. Each
    /// defined generator is expanded at most once, so a self-map like
    /// `E -> c E` is a definition rather than a rewrite loop.
    fn image_of(&self, g: &str) -> Result<LieExpr, EdsError> {
        let mut cur = LieExpr::gen(g);
        let mut expanded = BTreeSet::new();
        loop {
            let mut next = LieExpr::zero();
            let mut changed = false;
            for (b, c) in cur.terms() {
                match b {
                    BasisElem::Gen(name)
                        if !expanded.contains(name) && self.images.contains_key(name) =>
                    {
                        expanded.insert(name.clone());
                        next = next.add(&self.images[name].scale(c));
                        changed = true;
                    }
                    _ => next.insert(b.clone(), c.clone()),
                }
            }
            cur = next;
            if !changed {
                break;
            }
        }
        // a surviving generator whose definition is not a self-map means the
        // definitions chase each other in a loop
        for (b, _) in cur.terms() {
            if let BasisElem::Gen(name) = b {
                if name != g && expanded.contains(name) {
                    if let Some(img) = self.images.get(name) {
                        let self_map = match single_gen(img) {
                            Some((target, _)) => &target == name,
                            None => img.is_zero_syntactic(),
                        };
                        if !self_map {
                            return Err(EdsError::CyclicRealization(g.to_string()));
                        }
                    }
                }
            }
        }
        Ok(cur)
    }

    pub fn apply(&self, e: &LieExpr) -> Result<LieExpr, EdsError> {
        let mut out = LieExpr::zero();
        for (b, c) in e.terms() {
            match b {
                BasisElem::Gen(g) => out = out.add(&self.image_of(g)?.scale(c)),
                BasisElem::Bracket(x, y) => {
                    // realize children, re-bracket formally
                    let rx = self.apply(&LieExpr::single(x.as_ref().clone(), ScalarExpr::one()))?;
                    let ry = self.apply(&LieExpr::single(y.as_ref().clone(), ScalarExpr::one()))?;
                    for (bx, cx) in rx.terms() {
                        for (by, cy) in ry.terms() {
                            if let Some((e2, s)) = BasisElem::formal(bx.clone(), by.clone()) {
                                let mut coef = c.mul(cx).mul(cy);
                                if s < 0 {
                                    coef = coef.neg();
                                }
                                out.insert(e2, coef);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Push a relation table through a realization: surviving-generator pairs
/// get the realized right-hand sides; conflicting images of the same pair
/// are an inconsistency.
pub fn realize_table(
    table: &RelationTable,
    real: &Realization,
    name: &str,
    assumptions: &AssumptionSet,
) -> Result<RelationTable, EdsError> {
    let mut out = RelationTable::new(name);
    let mut candidates: BTreeMap<(String, String), Vec<LieExpr>> = BTreeMap::new();
    let mut zero_demands: Vec<((String, String), LieExpr)> = Vec::new();
    for ((a, b), rhs) in table.entries() {
        let la = real.image_of(a)?;
        let lb = real.image_of(b)?;
        let rr = real.apply(rhs)?;
        // la, lb are scalar multiples of single generators or zero
        let (ga, ca) = match single_gen(&la) {
            Some(x) => x,
            None if la.is_zero_syntactic() => {
                zero_demands.push(((a.clone(), b.clone()), rr));
                continue;
            }
            None => return Err(EdsError::InconsistentTable(format!("image of {} is not a monomial", a))),
        };
        let (gb, cb) = match single_gen(&lb) {
            Some(x) => x,
            None if lb.is_zero_syntactic() => {
                zero_demands.push(((a.clone(), b.clone()), rr));
                continue;
            }
            None => return Err(EdsError::InconsistentTable(format!("image of {} is not a monomial", b))),
        };
        if ga == gb {
            zero_demands.push(((a.clone(), b.clone()), rr));
            continue;
        }
        // [ca ga, cb gb] = ca cb [ga, gb] = rr  =>  [ga, gb] = rr / (ca cb)
        let scale = ca.mul(&cb);
        let value = divide_lie(&rr, &scale, assumptions).ok_or_else(|| {
            EdsError::InconsistentTable(format!("cannot divide image of [{} , {}]", a, b))
        })?;
        let (key, sign) = if ga < gb {
            ((ga.clone(), gb.clone()), 1i8)
        } else {
            ((gb.clone(), ga.clone()), -1i8)
        };
        let value = if sign < 0 { value.neg() } else { value };
        candidates.entry(key).or_default().push(value);
    }
    // seed the table with one representative per pair, preferring values
    // free of formal brackets, so remaining formal brackets can be resolved
    // through the table before consistency is judged
    for (key, vals) in &candidates {
        let rep = vals.iter().find(|v| !v.has_formal()).unwrap_or(&vals[0]);
        out.set(&key.0, &key.1, rep.apply_assumptions(assumptions));
    }
    for (key, vals) in &candidates {
        let rep = out.bracket_gens(&key.0, &key.1);
        for v in vals {
            let diff = out.resolve(v).sub(&rep).apply_assumptions(assumptions);
            if diff.is_zero(assumptions) != Trivalent::Yes {
                return Err(EdsError::InconsistentTable(format!(
                    "pair [{}, {}] realizes to conflicting values: ({}) vs ({})",
                    key.0, key.1, rep, v
                )));
            }
        }
    }
    for ((a, b), rr) in zero_demands {
        let rr = out.resolve(&rr).apply_assumptions(assumptions);
        if rr.is_zero(assumptions) == Trivalent::No {
            return Err(EdsError::InconsistentTable(format!(
                "[{}, {}] realizes to zero on the left but ({}) on the right",
                a, b, rr
            )));
        }
    }
    Ok(out)
}

fn single_gen(e: &LieExpr) -> Option<(String, ScalarExpr)> {
    let mut it = e.terms();
    let (b, c) = it.next()?;
    if it.next().is_some() {
        return None;
    }
    match b {
        BasisElem::Gen(g) => Some((g.clone(), c.clone())),
        _ => None,
    }
}

fn divide_lie(e: &LieExpr, s: &ScalarExpr, _assumptions: &AssumptionSet) -> Option<LieExpr> {
    let t = s.as_single_term()?;
    let mut out = LieExpr::zero();
    for (b, c) in e.terms() {
        out.insert(b.clone(), c.div_term(&t)?);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Coordinate, ParamRational};

    fn sl2() -> RelationTable {
        // [H,E] = 2E, [H,F] = -2F, [E,F] = H
        let mut t = RelationTable::new("sl2");
        t.set("H", "E", LieExpr::gen("E").scale(&ScalarExpr::from_i64(2)));
        t.set("H", "F", LieExpr::gen("F").scale(&ScalarExpr::from_i64(-2)));
        t.set("E", "F", LieExpr::gen("H"));
        t
    }

    #[test]
    fn antisymmetry_and_bilinearity() {
        let t = sl2();
        let a = LieExpr::gen("H").add(&LieExpr::gen("E").scale(&ScalarExpr::from_i64(3)));
        let b = LieExpr::gen("F");
        let ab = t.bracket(&a, &b);
        let ba = t.bracket(&b, &a);
        assert!(ab.add(&ba).is_zero_syntactic());
        let u = ScalarExpr::var(Coordinate::fibre("u"));
        let lhs = t.bracket(&a.scale(&u), &b);
        let rhs = ab.scale(&u);
        assert!(lhs.sub(&rhs).is_zero_syntactic());
    }

    #[test]
    fn sl2_jacobi_passes() {
        let audit = jacobi_audit(&sl2(), &AssumptionSet::empty());
        assert!(audit.pass(), "{:?}", audit.violations);
        assert_eq!(audit.triples_checked, 1);
    }

    #[test]
    fn broken_table_is_flagged() {
        // [H,E] = 2E, [H,F] = -2F, [E,F] = E : Jacobi fails on (E,F,H)
        let mut t = RelationTable::new("bad");
        t.set("H", "E", LieExpr::gen("E").scale(&ScalarExpr::from_i64(2)));
        t.set("H", "F", LieExpr::gen("F").scale(&ScalarExpr::from_i64(-2)));
        t.set("E", "F", LieExpr::gen("E"));
        let audit = jacobi_audit(&t, &AssumptionSet::empty());
        assert_eq!(audit.violations.len(), 1);
        assert_eq!(audit.violations[0].triple, ("E".into(), "F".into(), "H".into()));
    }

    #[test]
    fn undeclared_pair_is_formal() {
        let t = RelationTable::new("empty");
        let v = t.bracket_gens("X2", "X1");
        let (b, _) = v.terms().next().unwrap();
        assert_eq!(format!("{}", b), "[X1, X2]");
        let c = v.coeff(b);
        assert_eq!(c, ScalarExpr::from_i64(-1));
    }

    #[test]
    fn rhs_citing_another_pair_resolves() {
        // [A,B] = [C,D] and [C,D] = E : bracket(A,B) resolves to E
        let mut t = RelationTable::new("chain");
        let (cd, _) = BasisElem::formal(BasisElem::gen("C"), BasisElem::gen("D")).unwrap();
        t.set("A", "B", LieExpr::single(cd, ScalarExpr::one()));
        t.set("C", "D", LieExpr::gen("E"));
        let v = t.bracket(&LieExpr::gen("A"), &LieExpr::gen("B"));
        assert_eq!(v, LieExpr::gen("E"));
    }

    #[test]
    fn realization_scales_table() {
        // realize sl2 with E -> c E, F -> (1/c) F : table is unchanged
        let t = sl2();
        let mut r = Realization::new();
        let c = ScalarExpr::param("c");
        let cinv = ScalarExpr::term(
            ParamRational::one().div(&ParamRational::var("c")).unwrap(),
            Default::default(),
        );
        r.set("E", LieExpr::gen("E").scale(&c));
        r.set("F", LieExpr::gen("F").scale(&cinv));
        let mut a = AssumptionSet::empty();
        a.nonzero_params.push("c".to_string());
        let t2 = realize_table(&t, &r, "scaled", &a).unwrap();
        let v = t2.bracket_gens("E", "F");
        assert_eq!(v, LieExpr::gen("H"));
        assert!(jacobi_audit(&t2, &a).pass());
    }

    #[test]
    fn conflicting_realization_is_inconsistent() {
        // [H,E] = 2E, [H,F] = -2F; realize F -> E forces [H,E] to be both
        // 2E and -2E.
        let mut t = RelationTable::new("t");
        t.set("H", "E", LieExpr::gen("E").scale(&ScalarExpr::from_i64(2)));
        t.set("H", "F", LieExpr::gen("F").scale(&ScalarExpr::from_i64(-2)));
        let mut r = Realization::new();
        r.set("F", LieExpr::gen("E"));
        assert!(matches!(
            realize_table(&t, &r, "bad", &AssumptionSet::empty()),
            Err(EdsError::InconsistentTable(_))
        ));
    }
}
