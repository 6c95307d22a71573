//! Differential forms over a finite chart: wedge, exterior derivative,
//! closed-ideal certificates, sectioning to transversal PDEs, and
//! elimination down to a single PDE residual.

mod frac;

use std::collections::BTreeMap;
use std::fmt;

pub use frac::FracScalar;

use crate::error::EdsError;
use crate::scalar::{AssumptionSet, Coordinate, CoordKind, Parameter, ScalarExpr};

pub const MAX_DEGREE: usize = 5;

/// The coordinate chart: differentials exist for independent and fibre
/// coordinates, in declaration order (x < t < u < p < q < v < y).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    pub coords: Vec<Coordinate>,
    pub aux: Vec<Coordinate>,
}

impl Chart {
    pub fn new(coords: Vec<Coordinate>) -> Self {
        Chart { coords, aux: Vec::new() }
    }

    pub fn with_aux(mut self, aux: Coordinate) -> Self {
        self.aux.push(aux);
        self
    }

    pub fn index_of(&self, name: &str) -> Option<u8> {
        self.coords.iter().position(|c| c.name == name).map(|i| i as u8)
    }

    pub fn coord(&self, idx: u8) -> &Coordinate {
        &self.coords[idx as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<&Coordinate> {
        self.coords
            .iter()
            .chain(self.aux.iter())
            .find(|c| c.name == name)
    }

    pub fn fibre_coords(&self) -> impl Iterator<Item = &Coordinate> {
        self.coords.iter().filter(|c| matches!(c.kind, CoordKind::Fibre))
    }

    /// The canonical section: each fibre differential expands as
    /// dc -> c_x dx + c_t dt.
    pub fn standard_section(&self) -> JetSubstitution {
        let mut map = BTreeMap::new();
        for c in self.fibre_coords() {
            map.insert(
                c.name.clone(),
                (
                    ScalarExpr::var(Coordinate::jet(&c.name, 1, 0)),
                    ScalarExpr::var(Coordinate::jet(&c.name, 0, 1)),
                ),
            );
        }
        JetSubstitution { expansions: map }
    }
}

/// Sorted list of chart indices; the empty list is the 0-form basis element.
pub type WedgeMono = Vec<u8>;

fn merge_monos(a: &WedgeMono, b: &WedgeMono) -> Option<(WedgeMono, i64)> {
    let mut out = a.clone();
    let mut sign = 1i64;
    for &idx in b {
        match out.binary_search(&idx) {
            Ok(_) => return None, // repeated differential annihilates
            Err(pos) => {
                // moving past (len - pos) existing factors flips the sign
                if (out.len() - pos) % 2 == 1 {
                    sign = -sign;
                }
                out.insert(pos, idx);
            }
        }
    }
    Some((out, sign))
}

/// Graded exterior form with scalar coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferentialForm {
    pub degree: usize,
    components: BTreeMap<WedgeMono, ScalarExpr>,
}

impl DifferentialForm {
    pub fn zero(degree: usize) -> Self {
        DifferentialForm { degree, components: BTreeMap::new() }
    }

    pub fn scalar(e: ScalarExpr) -> Self {
        let mut f = DifferentialForm::zero(0);
        f.insert(Vec::new(), e);
        f
    }

    pub fn differential(chart: &Chart, name: &str) -> Result<Self, EdsError> {
        let idx = chart
            .index_of(name)
            .ok_or_else(|| EdsError::Undeclared(format!("d{}", name)))?;
        let mut f = DifferentialForm::zero(1);
        f.insert(vec![idx], ScalarExpr::one());
        Ok(f)
    }

    pub fn insert(&mut self, mono: WedgeMono, coef: ScalarExpr) {
        debug_assert_eq!(mono.len(), self.degree);
        if coef.is_zero_syntactic() {
            return;
        }
        let entry = self
            .components
            .entry(mono)
            .or_insert_with(ScalarExpr::zero);
        *entry = entry.add(&coef);
        if entry.is_zero_syntactic() {
            self.components.retain(|_, c| !c.is_zero_syntactic());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&WedgeMono, &ScalarExpr)> {
        self.components.iter()
    }

    pub fn component(&self, mono: &WedgeMono) -> ScalarExpr {
        self.components.get(mono).cloned().unwrap_or_else(ScalarExpr::zero)
    }

    pub fn add(&self, other: &DifferentialForm) -> DifferentialForm {
        let mut out = self.clone();
        for (m, c) in &other.components {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DifferentialForm) -> DifferentialForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DifferentialForm {
        DifferentialForm {
            degree: self.degree,
            components: self
                .components
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, e: &ScalarExpr) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree);
        for (m, c) in &self.components {
            out.insert(m.clone(), c.mul(e));
        }
        out
    }

    /// Graded-anticommutative product.
    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm, EdsError> {
        let degree = self.degree + other.degree;
        if degree > MAX_DEGREE {
            return Err(EdsError::DegreeOverflow(format!(
                "degree {} + {} exceeds {}",
                self.degree, other.degree, MAX_DEGREE
            )));
        }
        let mut out = DifferentialForm::zero(degree);
        for (m1, c1) in &self.components {
            for (m2, c2) in &other.components {
                if let Some((m, sign)) = merge_monos(m1, m2) {
                    out.insert(m, c1.mul(c2).scale(&crate::scalar::ParamRational::from_i64(sign)));
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative: d(a mu) = sum_c (da/dc) dc ^ mu.
    pub fn d(&self, chart: &Chart) -> Result<DifferentialForm, EdsError> {
        if self.degree + 1 > MAX_DEGREE {
            return Err(EdsError::DegreeOverflow("d on degree 5 form".into()));
        }
        let mut out = DifferentialForm::zero(self.degree + 1);
        for (mono, coef) in &self.components {
            for (i, c) in chart.coords.iter().enumerate() {
                let dc = coef.diff(c);
                if dc.is_zero_syntactic() {
                    continue;
                }
                if let Some((m, sign)) = merge_monos(&vec![i as u8], mono) {
                    out.insert(m, dc.scale(&crate::scalar::ParamRational::from_i64(sign)));
                }
            }
        }
        Ok(out)
    }

    pub fn apply_assumptions(&self, a: &AssumptionSet) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree);
        for (m, c) in &self.components {
            out.insert(m.clone(), c.apply_assumptions(a));
        }
        out
    }

    pub fn render(&self, chart: &Chart) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut pieces = Vec::new();
        for (mono, coef) in &self.components {
            let basis: Vec<String> = mono
                .iter()
                .map(|&i| format!("d{}", chart.coord(i).name))
                .collect();
            if basis.is_empty() {
                pieces.push(format!("{}", coef));
            } else {
                pieces.push(format!("({}) * {}", coef, basis.join("^")));
            }
        }
        pieces.join(" + ")
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // chart-free fallback rendering with raw indices
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (mono, coef) in &self.components {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}) * {:?}", coef, mono)?;
        }
        Ok(())
    }
}

/// A named system of generator forms with its chart and assumptions.
#[derive(Debug, Clone)]
pub struct ExteriorSystem {
    pub name: String,
    pub chart: Chart,
    pub parameters: Vec<Parameter>,
    pub assumptions: AssumptionSet,
    pub generators: Vec<(String, DifferentialForm)>,
}

impl ExteriorSystem {
    pub fn generator(&self, name: &str) -> Option<&DifferentialForm> {
        self.generators
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
    }
}

/// target = sum_i sigma_i ^ alpha_i, re-checkable by expansion.
#[derive(Debug, Clone)]
pub struct IdealCertificate {
    pub target: DifferentialForm,
    /// per-generator multiplier forms, same order as the system generators
    pub multipliers: Vec<DifferentialForm>,
}

impl IdealCertificate {
    /// Re-verify the stated identity by expansion.
    pub fn verify(&self, sys: &ExteriorSystem) -> Result<bool, EdsError> {
        let mut acc = self.target.apply_assumptions(&sys.assumptions).neg();
        for (sigma, (_, alpha)) in self.multipliers.iter().zip(&sys.generators) {
            let prod = sigma.wedge(&alpha.apply_assumptions(&sys.assumptions))?;
            acc = acc.add(&prod.apply_assumptions(&sys.assumptions));
        }
        Ok(acc.apply_assumptions(&sys.assumptions).is_zero())
    }
}

/// Section map: each fibre differential dc -> (dx component, dt component).
#[derive(Debug, Clone)]
pub struct JetSubstitution {
    pub expansions: BTreeMap<String, (ScalarExpr, ScalarExpr)>,
}

fn all_monos(n_coords: usize, degree: usize) -> Vec<WedgeMono> {
    // lexicographically ordered combinations
    fn rec(start: u8, n: u8, k: usize, cur: &mut WedgeMono, out: &mut Vec<WedgeMono>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n_coords as u8, degree, &mut Vec::new(), &mut out);
    out
}

/// Row-reduce the products {mono ^ alpha_i} and reduce `target` against
/// them; returns per-generator multipliers and the canonical residual.
fn reduce_in_ideal(
    target: &DifferentialForm,
    sys: &ExteriorSystem,
) -> Result<(Vec<DifferentialForm>, DifferentialForm), EdsError> {
    let a = &sys.assumptions;
    let target = target.apply_assumptions(a);
    let n = sys.chart.coords.len();

    // row set: (generator index, multiplier monomial, product form)
    struct Row {
        gen: usize,
        mult_mono: WedgeMono,
        form: DifferentialForm,
    }
    let mut rows: Vec<Row> = Vec::new();
    for (gi, (_, alpha)) in sys.generators.iter().enumerate() {
        if alpha.degree > target.degree {
            continue;
        }
        let md = target.degree - alpha.degree;
        let alpha = alpha.apply_assumptions(a);
        for mono in all_monos(n, md) {
            let mut mform = DifferentialForm::zero(md);
            mform.insert(mono.clone(), ScalarExpr::one());
            let prod = mform.wedge(&alpha)?;
            if prod.is_zero() {
                continue;
            }
            rows.push(Row { gen: gi, mult_mono: mono, form: prod });
        }
    }

    // columns: wedge monomials of the target degree, in canonical order
    let columns = all_monos(n, target.degree);
    let col_index: BTreeMap<WedgeMono, usize> = columns
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();

    let to_vec = |f: &DifferentialForm| -> Vec<FracScalar> {
        let mut v = vec![FracScalar::zero(); columns.len()];
        for (m, c) in f.components() {
            v[col_index[m]] = FracScalar::from_scalar(c.clone());
        }
        v
    };

    // echelon with tracked combinations over the original rows
    let mut echelon: Vec<(usize, Vec<FracScalar>, Vec<FracScalar>)> = Vec::new(); // (pivot col, row, combo)
    let nrows = rows.len();
    for (ri, row) in rows.iter().enumerate() {
        let mut v = to_vec(&row.form);
        let mut combo = vec![FracScalar::zero(); nrows];
        combo[ri] = FracScalar::one();
        for (pc, pv, pcombo) in &echelon {
            if !v[*pc].is_zero() {
                let factor = v[*pc].clone();
                for j in 0..v.len() {
                    v[j] = v[j].sub(&factor.mul(&pv[j]));
                }
                for j in 0..nrows {
                    combo[j] = combo[j].sub(&factor.mul(&pcombo[j]));
                }
            }
        }
        // pivot preference: a constant coefficient (division introduces no
        // coordinate denominators), then any provably nonzero single-term
        // entry, then any nonzero entry. Scanning from the back keeps low
        // columns (dx ^ dt is the first canonical monomial) pivot-free, so
        // irreducible residuals settle there; constraint extraction depends
        // on that.
        let single_nonzero = |e: &FracScalar| {
            !e.is_zero()
                && e.num().terms().any(|t| a.provably_nonzero(&t.coeff))
                && e.num().num_terms() == 1
        };
        let constant = |e: &FracScalar| {
            single_nonzero(e)
                && e.num()
                    .as_single_term()
                    .map_or(false, |t| t.powers.is_empty() && t.coeff.as_constant().is_some())
        };
        let pick = v
            .iter()
            .rposition(constant)
            .or_else(|| v.iter().rposition(single_nonzero))
            .or_else(|| v.iter().rposition(|e| !e.is_zero()));
        if let Some(pc) = pick {
            let pivot = v[pc].clone();
            for j in 0..v.len() {
                v[j] = v[j].div(&pivot).expect("nonzero pivot");
            }
            for j in 0..nrows {
                combo[j] = combo[j].div(&pivot).expect("nonzero pivot");
            }
            echelon.push((pc, v, combo));
        }
    }

    // reduce the target, accumulating the multiplier combination
    let mut tv = to_vec(&target);
    let mut coeffs = vec![FracScalar::zero(); nrows];
    for (pc, pv, pcombo) in &echelon {
        if !tv[*pc].is_zero() {
            let factor = tv[*pc].clone();
            for j in 0..tv.len() {
                tv[j] = tv[j].sub(&factor.mul(&pv[j]));
            }
            for j in 0..nrows {
                coeffs[j] = coeffs[j].add(&factor.mul(&pcombo[j]));
            }
        }
    }

    // assemble the residual
    let mut residual = DifferentialForm::zero(target.degree);
    for (j, col) in columns.iter().enumerate() {
        if !tv[j].is_zero() {
            let s = tv[j].as_scalar().ok_or_else(|| {
                EdsError::SolveFailed("residual has uncleared denominator".into())
            })?;
            residual.insert(col.clone(), s);
        }
    }

    // assemble per-generator multipliers
    let mut multipliers: Vec<DifferentialForm> = sys
        .generators
        .iter()
        .map(|(_, alpha)| DifferentialForm::zero(target.degree.saturating_sub(alpha.degree)))
        .collect();
    for (ri, row) in rows.iter().enumerate() {
        if coeffs[ri].is_zero() {
            continue;
        }
        let s = coeffs[ri].as_scalar().ok_or_else(|| {
            EdsError::SolveFailed(format!(
                "multiplier for generator {} has uncleared denominator",
                sys.generators[row.gen].0
            ))
        })?;
        multipliers[row.gen].insert(row.mult_mono.clone(), s);
    }
    Ok((multipliers, residual))
}

/// Express `target` in the ideal generated by the system forms; on success
/// the certificate re-verifies by expansion.
pub fn ideal_reduce(
    target: &DifferentialForm,
    sys: &ExteriorSystem,
) -> Result<IdealCertificate, EdsError> {
    let (multipliers, residual) = reduce_in_ideal(target, sys)?;
    if !residual.is_zero() {
        return Err(EdsError::NotInIdeal(residual.render(&sys.chart)));
    }
    let cert = IdealCertificate { target: target.clone(), multipliers };
    debug_assert!(cert.verify(sys)?);
    Ok(cert)
}

/// Like `ideal_reduce` but returns the irreducible residual instead of
/// failing; used by the curvature computation.
pub fn reduce_mod_ideal(
    target: &DifferentialForm,
    sys: &ExteriorSystem,
) -> Result<(Vec<DifferentialForm>, DifferentialForm), EdsError> {
    reduce_in_ideal(target, sys)
}

/// One certificate per generator proving d(alpha_i) in I.
pub fn check_closed(sys: &ExteriorSystem) -> Result<Vec<(String, IdealCertificate)>, EdsError> {
    let mut out = Vec::new();
    for (name, alpha) in &sys.generators {
        let da = alpha.d(&sys.chart)?;
        let cert = ideal_reduce(&da, sys).map_err(|e| match e {
            EdsError::NotInIdeal(r) => {
                EdsError::NotInIdeal(format!("d{} is not in the ideal: {}", name, r))
            }
            other => other,
        })?;
        out.push((name.clone(), cert));
    }
    Ok(out)
}

/// Pull each degree-2 generator back along the section; returns the scalar
/// multipliers of dx ^ dt (the PDE residuals).
pub fn section(sys: &ExteriorSystem, s: &JetSubstitution) -> Result<Vec<ScalarExpr>, EdsError> {
    let chart = &sys.chart;
    let ix = chart
        .index_of("x")
        .ok_or_else(|| EdsError::ChartMismatch("chart has no x".into()))?;
    let it = chart
        .index_of("t")
        .ok_or_else(|| EdsError::ChartMismatch("chart has no t".into()))?;
    let mut out = Vec::new();
    for (name, alpha) in &sys.generators {
        if alpha.degree != 2 {
            return Err(EdsError::Invalid(format!(
                "section requires degree-2 generators; {} has degree {}",
                name, alpha.degree
            )));
        }
        // dc -> (dx comp, dt comp)
        let expand = |idx: u8| -> (ScalarExpr, ScalarExpr) {
            let c = chart.coord(idx);
            if idx == ix {
                (ScalarExpr::one(), ScalarExpr::zero())
            } else if idx == it {
                (ScalarExpr::zero(), ScalarExpr::one())
            } else {
                s.expansions
                    .get(&c.name)
                    .cloned()
                    .unwrap_or_else(|| (ScalarExpr::zero(), ScalarExpr::zero()))
            }
        };
        let mut residual = ScalarExpr::zero();
        for (mono, coef) in alpha.components() {
            let (a_x, a_t) = expand(mono[0]);
            let (b_x, b_t) = expand(mono[1]);
            let det = a_x.mul(&b_t).sub(&a_t.mul(&b_x));
            residual = residual.add(&coef.mul(&det));
        }
        out.push(residual);
    }
    Ok(out)
}

/// Substitute triangular fibre definitions into the sectioned residuals and
/// return the single surviving PDE residual, sign-normalized.
pub fn eliminate(
    residuals: &[ScalarExpr],
    definitions: &[(String, ScalarExpr)],
) -> Result<ScalarExpr, EdsError> {
    // resolve the definitions forward so each is in base jets only
    let mut resolved: Vec<(String, ScalarExpr)> = Vec::new();
    for (name, expr) in definitions {
        let mut e = expr.clone();
        for (n, r) in &resolved {
            e = e.subst_fibre(n, r)?;
        }
        for (n, _) in definitions {
            if e.coordinates().iter().any(|c| match &c.kind {
                CoordKind::Fibre => &c.name == n,
                CoordKind::Jet { base, .. } => base == n,
                _ => false,
            }) {
                return Err(EdsError::NotTriangular(format!(
                    "definition of {} still references {}",
                    name, n
                )));
            }
        }
        resolved.push((name.clone(), e));
    }
    let mut survivors = Vec::new();
    for r in residuals {
        let mut e = r.clone();
        for (n, repl) in &resolved {
            e = e.subst_fibre(n, repl)?;
        }
        if !e.is_zero_syntactic() {
            survivors.push(e);
        }
    }
    match survivors.len() {
        1 => Ok(sign_normalized(&survivors[0])),
        0 => Ok(ScalarExpr::zero()),
        k => Err(EdsError::Invalid(format!(
            "elimination left {} nonzero residuals",
            k
        ))),
    }
}

/// Deterministic overall sign: the first term in canonical order gets a
/// positive leading coefficient.
pub fn sign_normalized(e: &ScalarExpr) -> ScalarExpr {
    match e.terms().next() {
        Some(t) if t.coeff.canonical_sign() < 0 => e.neg(),
        _ => e.clone(),
    }
}
