//! Conservation candidates: exact 2-forms theta = sum_i g_i alpha_i in the
//! ring of the system forms, optionally with a potential 1-form omega such
//! that d(omega) = theta.

use crate::error::EdsError;
use crate::exterior::{Chart, DifferentialForm, ExteriorSystem};
use crate::scalar::ScalarExpr;

#[derive(Debug, Clone)]
pub struct ConservationCandidate {
    pub name: String,
    pub multipliers: Vec<ScalarExpr>,
    pub omega: Option<DifferentialForm>,
}

/// theta = sum_i g_i alpha_i, expanded on the chart.
pub fn build_theta(g: &[ScalarExpr], sys: &ExteriorSystem) -> Result<DifferentialForm, EdsError> {
    if g.len() != sys.generators.len() {
        return Err(EdsError::Invalid(format!(
            "{} multipliers for {} generators",
            g.len(),
            sys.generators.len()
        )));
    }
    let mut theta = DifferentialForm::zero(2);
    for (gi, (_, alpha)) in g.iter().zip(&sys.generators) {
        theta = theta.add(&alpha.scale(gi));
    }
    Ok(theta.apply_assumptions(&sys.assumptions))
}

#[derive(Debug, Clone)]
pub struct ExactnessReport {
    /// d(theta), the zero 3-form exactly when theta is closed
    pub residual: DifferentialForm,
}

impl ExactnessReport {
    pub fn pass(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Exactness as closedness of theta: d(theta) must expand to zero on the
/// chart (the chart is contractible, so closed means exact here).
pub fn check_exact(theta: &DifferentialForm, chart: &Chart) -> Result<ExactnessReport, EdsError> {
    Ok(ExactnessReport { residual: theta.d(chart)? })
}

#[derive(Debug, Clone)]
pub struct PotentialReport {
    /// d(omega) - theta
    pub residual: DifferentialForm,
}

impl PotentialReport {
    pub fn pass(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Verify d(omega) = theta by expansion.
pub fn check_potential(
    omega: &DifferentialForm,
    theta: &DifferentialForm,
    chart: &Chart,
) -> Result<PotentialReport, EdsError> {
    if omega.degree != 1 {
        return Err(EdsError::Invalid(format!(
            "potential form must have degree 1, got {}",
            omega.degree
        )));
    }
    Ok(PotentialReport {
        residual: omega.d(chart)?.sub(theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Coordinate;

    fn chart() -> Chart {
        Chart::new(vec![
            Coordinate::independent("x"),
            Coordinate::independent("t"),
            Coordinate::fibre("u"),
        ])
    }

    #[test]
    fn u_du_dx_is_closed() {
        let ch = chart();
        let du = DifferentialForm::differential(&ch, "u").unwrap();
        let dx = DifferentialForm::differential(&ch, "x").unwrap();
        let theta = du.wedge(&dx).unwrap().scale(&ScalarExpr::var(Coordinate::fibre("u")));
        assert!(check_exact(&theta, &ch).unwrap().pass());
    }

    #[test]
    fn potential_of_u_du_dx() {
        // d(u^2/2 dx) = u du ^ dx
        let ch = chart();
        let du = DifferentialForm::differential(&ch, "u").unwrap();
        let dx = DifferentialForm::differential(&ch, "x").unwrap();
        let u = ScalarExpr::var(Coordinate::fibre("u"));
        let theta = du.wedge(&dx).unwrap().scale(&u);
        let half = ScalarExpr::term(
            crate::scalar::ParamRational::from_rational(num::BigRational::new(1.into(), 2.into())),
            Default::default(),
        );
        let omega = dx.scale(&u.mul(&u).mul(&half));
        assert!(check_potential(&omega, &theta, &ch).unwrap().pass());
        // wrong potential fails
        let omega_bad = dx.scale(&u.mul(&u));
        assert!(!check_potential(&omega_bad, &theta, &ch).unwrap().pass());
    }

    #[test]
    fn gauge_term_contributes_nothing() {
        // omega + d(v) has the same residual: d(dv) = 0
        let ch = Chart::new(vec![
            Coordinate::independent("x"),
            Coordinate::independent("t"),
            Coordinate::fibre("u"),
            Coordinate::fibre("v"),
        ]);
        let du = DifferentialForm::differential(&ch, "u").unwrap();
        let dx = DifferentialForm::differential(&ch, "x").unwrap();
        let u = ScalarExpr::var(Coordinate::fibre("u"));
        let theta = du.wedge(&dx).unwrap().scale(&u);
        let half = ScalarExpr::term(
            crate::scalar::ParamRational::from_rational(num::BigRational::new(1.into(), 2.into())),
            Default::default(),
        );
        let omega = dx.scale(&u.mul(&u).mul(&half));
        let dv = DifferentialForm::scalar(ScalarExpr::var(Coordinate::fibre("v"))).d(&ch).unwrap();
        let omega2 = omega.add(&dv);
        assert_eq!(
            check_potential(&omega, &theta, &ch).unwrap().pass(),
            check_potential(&omega2, &theta, &ch).unwrap().pass()
        );
        assert!(check_potential(&omega2, &theta, &ch).unwrap().pass());
    }
}
