//! Equivalence relations on maps and on connection pairs, decided by the
//! exactness test of transgression forms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chernweil::odd_chern_character;
use crate::error::{Error, Result};
use crate::forms::{ExactnessReport, GradedForm, Parity, Verdict};
use crate::geometry::ConnectionPair;
use crate::grid::{same_grid, Factor, Grid, GridSpec};
use crate::lie::{rotation_homotopy_family, GroupMap};
use crate::scalar::{factorial, inv_two_pi_i, Real};
use crate::stringforms::string_datum_defect;

/// Endpoint agreement required of a homotopy.
pub const ENDPOINT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceVerdict {
    Equivalent,
    Inequivalent,
    UnsupportedDomain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub cutoff: usize,
    pub tol: f64,
    pub grid: GridSpec,
}

/// Outcome of an equivalence test for one given homotopy or path.
///
/// An `Inequivalent` verdict only says that the transgression of the
/// supplied homotopy is not exact.
#[derive(Clone, Debug)]
pub struct EquivalenceReport<T: Real> {
    pub verdict: EquivalenceVerdict,
    pub defect: GradedForm<T>,
    /// Empty when the domain is unsupported.
    pub per_degree: Vec<ExactnessReport<T>>,
    /// `sup |d(transgression) - (Ch_odd(g1) - Ch_odd(g0))|` for map
    /// equivalences.
    pub transgression_defect: Option<T>,
    pub params: ReportParams,
}

impl<T: Real> EquivalenceReport<T> {
    fn from_reports(
        defect: GradedForm<T>,
        per_degree: Option<Vec<ExactnessReport<T>>>,
        params: ReportParams,
    ) -> Self {
        let (verdict, per_degree) = match per_degree {
            None => (EquivalenceVerdict::UnsupportedDomain, Vec::new()),
            Some(r) => {
                let ok = r.iter().all(|r| r.verdict == Verdict::Exact);
                let v = if ok {
                    EquivalenceVerdict::Equivalent
                } else {
                    EquivalenceVerdict::Inequivalent
                };
                (v, r)
            }
        };
        Self {
            verdict,
            defect,
            per_degree,
            transgression_defect: None,
            params,
        }
    }

    pub fn is_equivalent(&self) -> bool {
        self.verdict == EquivalenceVerdict::Equivalent
    }
}

/// `M x [t]` with the parameter as the last axis.
pub fn homotopy_grid<T: Real>(base: &Arc<Grid<T>>, t_factor: Factor) -> Result<Arc<Grid<T>>> {
    match t_factor {
        Factor::Interval { a, b, .. } | Factor::Lobatto { a, b, .. } if a == 0.0 && b == 1.0 => {}
        _ => {
            return Err(Error::InvalidGrid(
                "the homotopy parameter must be an interval factor over [0, 1]".into(),
            ))
        }
    }
    base.insert_factor(base.spec().factors.len(), t_factor)
}

fn split_homotopy<T: Real>(big: &Arc<Grid<T>>) -> Result<(usize, Arc<Grid<T>>)> {
    if big.dim() < 2 {
        return Err(Error::InvalidGrid("a homotopy needs a base and a parameter axis".into()));
    }
    let t = big.dim() - 1;
    let ax = big.axis(t)?;
    if ax.kind == crate::grid::AxisKind::Periodic || ax.lo != T::zero() || ax.hi != T::one() {
        return Err(Error::InvalidGrid("the last axis must be a parameter interval [0, 1]".into()));
    }
    Ok((t, big.remove_axis(t)?))
}

/// Integrand `sum_j c_j tr((g^{-1} d_t g) (g^{-1} d_M g)^{2j})` of the
/// transgression on `M x [t]`, for `j = 0..cutoff`.
pub fn twz_integrand<T: Real>(g: &GroupMap<T>, cutoff: usize) -> Result<GradedForm<T>> {
    let big = g.grid();
    let (t, _) = split_homotopy(big)?;
    let theta = g.maurer_cartan_axes(((1u32 << big.dim()) - 1) & !(1 << t));
    let sq = theta.wedge(&theta)?;
    let mut power = g.log_derivative(t)?;
    let mut out = GradedForm::new(Parity::Even);
    for j in 0..cutoff {
        if 2 * j >= big.dim() {
            break;
        }
        if j > 0 {
            power = power.wedge(&sq)?;
        }
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        let c = inv_two_pi_i::<T>().powu(j as u32 + 1) * (sign * factorial::<T>(j) / factorial::<T>(2 * j));
        out.insert(power.trace().scale(c))?;
    }
    Ok(out)
}

/// Transgression form of a unitary homotopy `G` on `M x [0, 1]` (parameter
/// last), degrees `0, 2, ..., 2 cutoff - 2`.
pub fn twz_transgression<T: Real>(g: &GroupMap<T>, cutoff: usize) -> Result<GradedForm<T>> {
    if !g.is_unitary() {
        return Err(Error::InvalidArgument("the homotopy must be unitary".into()));
    }
    let (t, _) = split_homotopy(g.grid())?;
    let integrand = twz_integrand(g, cutoff)?;
    let mut out = GradedForm::new(Parity::Even);
    for (_, f) in integrand.terms() {
        out.insert(f.integrate_slices(t)?)?;
    }
    Ok(out)
}

/// Endpoint of a homotopy at `t = 0` or `t = 1`.
pub fn homotopy_endpoint<T: Real>(g: &GroupMap<T>, end: bool) -> Result<GroupMap<T>> {
    let (t, _) = split_homotopy(g.grid())?;
    let idx = if end { g.grid().shape()[t] - 1 } else { 0 };
    g.slice(t, idx)
}

fn endpoint_defect<T: Real>(g: &GroupMap<T>, h: &GroupMap<T>) -> Result<T> {
    if !same_grid(g.grid(), h.grid()) {
        return Err(Error::GridMismatch);
    }
    if g.rank() != h.rank() {
        return Err(Error::RankMismatch(g.rank(), h.rank()));
    }
    Ok(crate::linalg::max_abs_diff(g.values(), h.values()))
}

/// CS-equivalence of `g0` and `g1` witnessed by the homotopy `homotopy`.
pub fn cs_equivalent<T: Real>(
    g0: &GroupMap<T>,
    g1: &GroupMap<T>,
    homotopy: &GroupMap<T>,
    cutoff: usize,
    tol: T,
) -> Result<EquivalenceReport<T>> {
    for (g, end) in [(g0, false), (g1, true)] {
        let defect = endpoint_defect(&homotopy_endpoint(homotopy, end)?, g)?;
        if defect > T::lit(ENDPOINT_TOL) {
            return Err(Error::InvalidArgument(format!(
                "homotopy endpoint {} differs by {defect:e}",
                u8::from(end)
            )));
        }
    }
    let form = twz_transgression(homotopy, cutoff)?;
    let per_degree = match form.is_exact(tol) {
        Ok(r) => Some(r),
        Err(Error::UnsupportedDomain(_)) => None,
        Err(e) => return Err(e),
    };
    let delta = odd_chern_character(g1, cutoff)?.sub(&odd_chern_character(g0, cutoff)?)?;
    let transgression_defect = form.d().max_defect(&delta)?;
    let params = ReportParams {
        cutoff,
        tol: tol.as_f64(),
        grid: g0.grid().spec().clone(),
    };
    let mut report = EquivalenceReport::from_reports(form, per_degree, params);
    report.transgression_defect = Some(transgression_defect);
    Ok(report)
}

/// String-datum equivalence of two pairs: exactness of the string potential
/// of the straight line between them.
pub fn string_data_equivalent<T: Real>(
    p0: &ConnectionPair<T>,
    p1: &ConnectionPair<T>,
    cutoff: usize,
    tol: T,
) -> Result<EquivalenceReport<T>> {
    let d = string_datum_defect(p0, p1, cutoff, tol)?;
    let base = p0.grid().remove_axis(p0.theta_axis())?;
    let params = ReportParams {
        cutoff,
        tol: tol.as_f64(),
        grid: base.spec().clone(),
    };
    Ok(EquivalenceReport::from_reports(d.form, d.reports, params))
}

/// Block direct sum of pairs.
pub fn direct_sum<T: Real>(p0: &ConnectionPair<T>, p1: &ConnectionPair<T>) -> Result<ConnectionPair<T>> {
    p0.direct_sum(p1)
}

/// Inverse of a class: `g^{-1}`, the rotation homotopy from `g (+) g^{-1}`
/// to the identity on `M x [0, 1]`, and the equivalence report.
pub struct InverseWitness<T: Real> {
    pub inverse: GroupMap<T>,
    pub homotopy: GroupMap<T>,
    pub report: EquivalenceReport<T>,
}

/// Parameter factor used by [`inverse_witness`].
pub fn default_homotopy_factor() -> Factor {
    Factor::Lobatto { n: 24, a: 0.0, b: 1.0 }
}

pub fn inverse_witness<T: Real>(
    g: &GroupMap<T>,
    cutoff: usize,
    tol: T,
    t_factor: Option<Factor>,
) -> Result<InverseWitness<T>> {
    if !g.is_unitary() {
        return Err(Error::InvalidArgument("the inverse witness needs a unitary map".into()));
    }
    let inverse = g.pointwise_inverse();
    let big = homotopy_grid(g.grid(), t_factor.unwrap_or_else(default_homotopy_factor))?;
    let homotopy = rotation_homotopy_family(g, &big)?;
    let g0 = g.block_sum(&inverse)?;
    let g1 = GroupMap::identity(g.grid(), 2 * g.rank());
    let report = cs_equivalent(&g0, &g1, &homotopy, cutoff, tol)?;
    Ok(InverseWitness {
        inverse,
        homotopy,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_smooth_map, RandomSpec};
    use crate::scalar::im;

    fn torus(n: &[usize]) -> Arc<Grid<f64>> {
        Grid::new(GridSpec::torus(n)).unwrap()
    }

    #[test]
    fn constant_homotopy_is_equivalent() {
        let g = torus(&[16, 16]);
        let m = random_smooth_map(&g, 2, &RandomSpec::new(3, 1, 0.3), true, false).unwrap();
        let big = homotopy_grid(&g, Factor::Interval { n: 9, a: 0.0, b: 1.0 }).unwrap();
        let h = GroupMap::from_fn(&big, 2, true, false, |p, out| {
            out.copy_from_slice(m.value(p / 9));
        })
        .unwrap();
        let r = cs_equivalent(&m, &m, &h, 2, 1e-9).unwrap();
        assert!(r.is_equivalent());
        assert!(r.defect.max_abs() < 1e-14);
    }

    #[test]
    fn sine_phase_is_inequivalent() {
        let g = torus(&[32]);
        let big = homotopy_grid(&g, Factor::Lobatto { n: 16, a: 0.0, b: 1.0 }).unwrap();
        let h = GroupMap::from_fn(&big, 1, true, false, |p, out| {
            let x = big.coords(p);
            out[0] = im(x[1] * x[0].sin()).exp();
        })
        .unwrap();
        let g0 = GroupMap::identity(&g, 1);
        let g1 = homotopy_endpoint(&h, true).unwrap();
        let r = cs_equivalent(&g0, &g1, &h, 1, 1e-9).unwrap();
        assert_eq!(r.verdict, EquivalenceVerdict::Inequivalent);
        let d0 = r.defect.get(0).unwrap();
        for q in 0..32 {
            let want = g.coords(q)[0].sin() / (2.0 * std::f64::consts::PI);
            assert!((d0.at(0, q)[0].re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_mismatch_is_rejected() {
        let g = torus(&[8, 8]);
        let m = random_smooth_map(&g, 1, &RandomSpec::new(1, 1, 0.3), true, false).unwrap();
        let w = inverse_witness(&m, 1, 1e-9, None).unwrap();
        assert!(cs_equivalent(&GroupMap::identity(&g, 2), &GroupMap::identity(&g, 2), &w.homotopy, 1, 1e-9).is_err());
    }

    #[test]
    fn identity_has_trivial_witness() {
        let g = torus(&[8, 8]);
        let w = inverse_witness(&GroupMap::identity(&g, 2), 2, 1e-9, None).unwrap();
        assert!(w.report.is_equivalent());
        assert!(w.report.defect.max_abs() < 1e-14);
    }
}
