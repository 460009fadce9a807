//! String forms, string potentials and their relatives.
//!
//! All forms here live on the base `M` of a grid `M x S^1` whose last axis
//! is the distinguished circle. Cutoffs count terms `j = 1..=cutoff`: string
//! forms have degree `2j - 1`, string potentials degree `2j - 2`.

use std::sync::Arc;

use num_complex::Complex;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::chernweil::{chern_character, chern_simons, ConnectionPath};
use crate::error::{Error, Result};
use crate::forms::{sym_trace, ExactnessReport, GradedForm, MatrixForm, Parity};
use crate::geometry::{path_grid, ConnectionPair, PairPath};
use crate::grid::{AxisKind, Factor, Grid};
use crate::lie::GroupMap;
use crate::quadrature;
use crate::scalar::{factorial, inv_two_pi_i, Real, C};

fn real<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// `c_{i,j} = (-1/2)^i j! (j-1)! / ((j+i)! (j-1-i)!)` for `0 <= i <= j - 1`.
pub fn string_coefficient<T: Real>(i: usize, j: usize) -> T {
    assert!(j >= 1 && i < j, "c_(i,j) needs 0 <= i < j");
    // (j-1)!/(j-1-i)! * j!/(j+i)! as a running product
    let mut c = T::one();
    for m in 1..=i {
        c *= T::of(j - m) / T::of(j + m);
    }
    c * T::lit(-0.5).powi(i as i32)
}

/// Exact rational `c_{i,j}`.
pub fn string_coefficient_exact(i: usize, j: usize) -> Ratio<i128> {
    assert!(j >= 1 && i < j, "c_(i,j) needs 0 <= i < j");
    let fact = |k: usize| (1..=k as i128).product::<i128>();
    let sign = if i % 2 == 0 { 1 } else { -1 };
    Ratio::new(sign * fact(j) * fact(j - 1), (1i128 << i) * fact(j + i) * fact(j - 1 - i))
}

/// Table of `c_{i,j}` for `1 <= j <= cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringCoefficients {
    pub cutoff: usize,
    /// `rows[j - 1][i] = c_{i,j}`.
    pub rows: Vec<Vec<f64>>,
}

impl StringCoefficients {
    pub fn new(cutoff: usize) -> Self {
        let rows = (1..=cutoff)
            .map(|j| (0..j).map(|i| string_coefficient::<f64>(i, j)).collect())
            .collect();
        Self { cutoff, rows }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.rows.get(j.checked_sub(1)?)?.get(i).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StringFormAlgorithm {
    /// `sum_j j int tr_j(nabla Phi, R, ..., R) dtheta`.
    Direct,
    /// Fiber integral of the Chern character of the caloron transform.
    ViaCaloron,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialAlgorithm {
    /// `int_0^1 slice_t(i_{d/dt} s(path))`.
    Slice,
    /// Closed formula in `A'`, `Phi'`, `R_t` and `nabla Phi_t`.
    Explicit,
    /// Fiber integral of the Chern-Simons form of the caloron path.
    CsFiber,
}

fn theta_of<T: Real>(grid: &Grid<T>) -> Result<usize> {
    grid.distinguished_axis().ok_or(Error::NoDistinguishedCircle)
}

/// Base dimension of a grid `M x S^1`.
fn base_dim<T: Real>(grid: &Grid<T>) -> Result<usize> {
    theta_of(grid)?;
    Ok(grid.dim() - 1)
}

/// Integral over the circle of forms without `dtheta` components.
fn circle_integral<T: Real>(form: &MatrixForm<T>) -> Result<MatrixForm<T>> {
    form.integrate_slices(theta_of(form.grid())?)
}

/// String form `s(A, Phi)`.
pub fn string_form<T: Real>(
    p: &ConnectionPair<T>,
    cutoff: usize,
    algorithm: StringFormAlgorithm,
) -> Result<GradedForm<T>> {
    match algorithm {
        StringFormAlgorithm::ViaCaloron => {
            chern_character(p.caloron_transform().form(), cutoff)?.fiber_integrate()
        }
        StringFormAlgorithm::Direct => {
            let dim = base_dim(p.grid())?;
            let r = p.base_curvature();
            let x = p.higgs_covariant_derivative();
            let mut out = GradedForm::new(Parity::Odd);
            for j in 1..=cutoff {
                if 2 * j - 1 > dim {
                    break;
                }
                let mut args = vec![&x];
                args.extend(std::iter::repeat_n(&r, j - 1));
                let term = sym_trace(&args)?.scale_real(T::of(j));
                out.insert(circle_integral(&term)?)?;
            }
            Ok(out)
        }
    }
}

/// Quadrature data `(weight, pair, A', Phi')` of a pair path. Straight
/// lines use `nodes` Gauss-Legendre points.
fn pair_path_quadrature<T: Real>(
    path: &PairPath<T>,
    nodes: usize,
) -> Result<Vec<(T, ConnectionPair<T>, MatrixForm<T>, MatrixForm<T>)>> {
    match path {
        PairPath::StraightLine { p0, p1 } => {
            let (da, dphi) = p0.difference(p1)?;
            let (ts, ws) = quadrature::gauss_legendre(nodes, T::zero(), T::one());
            ts.into_iter()
                .zip(ws)
                .map(|(t, w)| Ok((w, p0.lerp(p1, t)?, da.clone(), dphi.clone())))
                .collect()
        }
        PairPath::Sampled { t_factor, pairs } => {
            let tg = Grid::<T>::new(crate::grid::GridSpec::new(vec![t_factor.clone()], None))?;
            let ax = &tg.axes()[0];
            let grid = pairs[0].grid();
            let rank = pairs[0].rank();
            (0..pairs.len())
                .map(|k| {
                    let mut da = MatrixForm::zeros(grid, 1, rank);
                    let mut dphi = MatrixForm::zeros(grid, 0, rank);
                    for (m, w) in ax.derivative_row(k) {
                        da.axpy(real(w), pairs[m].a())?;
                        dphi.axpy(real(w), pairs[m].phi())?;
                    }
                    Ok((ax.weights[k], pairs[k].clone(), da, dphi))
                })
                .collect()
        }
    }
}

/// Default parameter factor used to materialize straight lines.
pub fn default_t_factor(cutoff: usize) -> Factor {
    Factor::Lobatto {
        n: (cutoff + 2).max(8),
        a: 0.0,
        b: 1.0,
    }
}

/// Materialize a pair path as one pair on `M x [t] x S^1`.
pub fn materialize_pair_path<T: Real>(
    path: &PairPath<T>,
    t_factor: &Factor,
) -> Result<(ConnectionPair<T>, usize)> {
    let sampled = path.sample(t_factor.clone())?;
    let PairPath::Sampled { t_factor, pairs } = &sampled else {
        unreachable!("sample always returns a sampled path")
    };
    let (big, t_axis) = path_grid(path.grid(), t_factor)?;
    let a: Vec<MatrixForm<T>> = pairs.iter().map(|p| p.a().clone()).collect();
    let phi: Vec<MatrixForm<T>> = pairs.iter().map(|p| p.phi().clone()).collect();
    let pair = ConnectionPair::new(
        MatrixForm::stack(&big, t_axis, &a)?,
        MatrixForm::stack(&big, t_axis, &phi)?,
        path.is_unitary(),
    )?;
    Ok((pair, t_axis))
}

/// The caloron path of framed connections of a pair path.
pub fn caloron_path<T: Real>(path: &PairPath<T>) -> Result<ConnectionPath<T>> {
    match path {
        PairPath::StraightLine { p0, p1 } => ConnectionPath::straight_line(
            p0.caloron_transform().form().clone(),
            p1.caloron_transform().form().clone(),
        ),
        PairPath::Sampled { t_factor, pairs } => ConnectionPath::sampled(
            t_factor.clone(),
            pairs.iter().map(|p| p.caloron_transform().form().clone()).collect(),
        ),
    }
}

/// String potential `S(path)`.
///
/// `t_factor` is used by the slice algorithm to sample straight lines
/// (default: [`default_t_factor`]).
pub fn string_potential<T: Real>(
    path: &PairPath<T>,
    cutoff: usize,
    algorithm: PotentialAlgorithm,
    t_factor: Option<&Factor>,
) -> Result<GradedForm<T>> {
    let dim = base_dim(path.grid())?;
    match algorithm {
        PotentialAlgorithm::CsFiber => chern_simons(&caloron_path(path)?, cutoff)?.fiber_integrate(),
        PotentialAlgorithm::Slice => {
            let factor = match (path, t_factor) {
                (PairPath::Sampled { t_factor, .. }, _) => t_factor.clone(),
                (_, Some(f)) => f.clone(),
                (_, None) => default_t_factor(cutoff),
            };
            let (big, t_axis) = materialize_pair_path(path, &factor)?;
            let s = string_form(&big, cutoff, StringFormAlgorithm::ViaCaloron)?;
            let mut out = GradedForm::new(Parity::Even);
            for (_, form) in s.terms() {
                out.insert(form.contract(t_axis)?.integrate_slices(t_axis)?)?;
            }
            Ok(out)
        }
        PotentialAlgorithm::Explicit => {
            let mut out = GradedForm::new(Parity::Even);
            for (w, p, da, dphi) in pair_path_quadrature(path, cutoff + 1)? {
                let r = p.base_curvature();
                let x = p.higgs_covariant_derivative();
                for j in 1..=cutoff {
                    if 2 * j - 2 > dim {
                        break;
                    }
                    let jf = T::of(j);
                    let mut term = {
                        let mut args = Vec::with_capacity(j);
                        args.extend(std::iter::repeat_n(&r, j - 1));
                        args.push(&dphi);
                        sym_trace(&args)?
                    };
                    if j >= 2 {
                        let mut args = vec![&da];
                        args.extend(std::iter::repeat_n(&r, j - 2));
                        args.push(&x);
                        term.axpy(real(T::of(j - 1)), &sym_trace(&args)?)?;
                    }
                    out.insert(circle_integral(&term)?.scale_real(jf * w))?;
                }
            }
            Ok(out)
        }
    }
}

/// Total string potential of a single pair: the string potential of the
/// straight line from the trivial pair, in closed form with the
/// coefficients `c_{i,j}`.
pub fn total_string_potential<T: Real>(p: &ConnectionPair<T>, cutoff: usize) -> Result<GradedForm<T>> {
    let dim = base_dim(p.grid())?;
    let a = p.a();
    let phi = p.phi();
    let f = p.base_curvature();
    let aa = a.wedge(a)?.scale_real(T::lit(2.0));
    let nabla = p.higgs_covariant_derivative();
    let comm = a.graded_commutator(phi)?;
    let mut out = GradedForm::new(Parity::Even);
    for j in 1..=cutoff {
        if 2 * j - 2 > dim {
            break;
        }
        let mut term = MatrixForm::zeros(p.grid(), 2 * j - 2, 1);
        for i in 0..j {
            let mut args = vec![phi];
            args.extend(std::iter::repeat_n(&aa, i));
            args.extend(std::iter::repeat_n(&f, j - i - 1));
            term.axpy(real(string_coefficient::<T>(i, j)), &sym_trace(&args)?)?;
        }
        for i in 1..j {
            let mut x = comm.scale_real(T::of(i));
            x.axpy(real(-T::of(i + j)), &nabla)?;
            let mut args = vec![a, &x];
            args.extend(std::iter::repeat_n(&aa, i - 1));
            args.extend(std::iter::repeat_n(&f, j - i - 1));
            let c = T::lit(2.0) * string_coefficient::<T>(i, j);
            term.axpy(real(c), &sym_trace(&args)?)?;
        }
        out.insert(circle_integral(&term)?)?;
    }
    Ok(out)
}

/// The Flat pair `(g^{-1} d_M g, g^{-1} d_theta g)` of a based map.
pub fn flat_pair<T: Real>(g: &GroupMap<T>) -> Result<ConnectionPair<T>> {
    if !g.is_based() {
        return Err(Error::InvalidArgument("the map must be based".into()));
    }
    let theta = theta_of(g.grid())?;
    let base_mask = ((1u32 << g.grid().dim()) - 1) & !(1 << theta);
    let mut a = g.maurer_cartan_axes(base_mask);
    let mut phi = g.log_derivative(theta)?;
    if g.is_unitary() {
        // sampled derivatives of a unitary map are only anti-Hermitian up to discretization error
        a = a.sub(&a.adjoint())?.scale_real(T::lit(0.5));
        phi = phi.sub(&phi.adjoint())?.scale_real(T::lit(0.5));
    }
    ConnectionPair::new(a, phi, g.is_unitary())
}

/// Pullback of the transgressed generator,
/// `sum_m (-1)^m m!/(2m)! (1/2 pi i)^{m+1} int tr(Phi Theta_M^{2m}) dtheta`
/// with `Phi = g^{-1} d_theta g` and `Theta_M = g^{-1} d_M g`, for
/// `m = 0..cutoff` (degrees `0, 2, ..., 2 cutoff - 2`).
pub fn tau_hat_pullback<T: Real>(g: &GroupMap<T>, cutoff: usize) -> Result<GradedForm<T>> {
    let flat = flat_pair(g)?;
    let dim = base_dim(g.grid())?;
    let theta_m = flat.a();
    let sq = theta_m.wedge(theta_m)?;
    let mut power = flat.phi().clone();
    let mut out = GradedForm::new(Parity::Even);
    for m in 0..cutoff {
        if 2 * m > dim {
            break;
        }
        if m > 0 {
            power = power.wedge(&sq)?;
        }
        let sign = if m % 2 == 0 { T::one() } else { -T::one() };
        let c = inv_two_pi_i::<T>().powu(m as u32 + 1) * (sign * factorial::<T>(m) / factorial::<T>(2 * m));
        out.insert(circle_integral(&power.trace().scale(c))?)?;
    }
    Ok(out)
}

/// Pullback of the universal string form,
/// `sum_k (-1/2)^{k-1} k! (k-1)!/(2k-1)! tr_k(Theta, [Theta, Theta], ...)`
/// for `k = 1..=cutoff + 1` (degrees up to `2 cutoff + 1`, matching the odd
/// Chern character with the same cutoff).
pub fn universal_string_pullback<T: Real>(g: &GroupMap<T>, cutoff: usize) -> Result<GradedForm<T>> {
    let theta = g.maurer_cartan();
    let bracket = theta.wedge(&theta)?.scale_real(T::lit(2.0));
    let dim = g.grid().dim();
    let mut out = GradedForm::new(Parity::Odd);
    for k in 1..=cutoff + 1 {
        if 2 * k - 1 > dim {
            break;
        }
        let mut args = vec![&theta];
        args.extend(std::iter::repeat_n(&bracket, k - 1));
        let c = T::lit(-0.5).powi(k as i32 - 1) * factorial::<T>(k) * factorial::<T>(k - 1)
            / factorial::<T>(2 * k - 1);
        out.insert(sym_trace(&args)?.scale_real(c))?;
    }
    Ok(out)
}

/// Default circle profile `rho(theta) = c (1 - cos theta)` normalized so
/// that `int rho^k = (2 pi)^{k+1}`.
///
/// Uses `int_0^{2 pi} (1 - cos)^k = 2 pi binom(2k, k) / 2^k`.
pub fn default_rho_scale(k: usize) -> f64 {
    let binom = (1..=k).fold(1.0, |acc, m| acc * (k + m) as f64 / m as f64);
    2.0 * std::f64::consts::PI * (2f64.powi(k as i32) / binom).powf(1.0 / k as f64)
}

/// Connection pair of rank 1 whose caloron transform is
/// `i rho(theta) alpha + i f dtheta` with `alpha = x_1 dx_2 + x_3 dx_4 + ...`.
///
/// For `k = 0` the pair is `(0, i f)` on any base. For `k >= 1` the first
/// `2k` base factors must be intervals. `f` receives base coordinates.
pub fn surjectivity_witness<T, F>(
    grid: &Arc<Grid<T>>,
    f: F,
    k: usize,
    rho: Option<&(dyn Fn(T) -> T + Sync)>,
) -> Result<ConnectionPair<T>>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    let theta = theta_of(grid)?;
    let i_unit = Complex::new(T::zero(), T::one());
    let phi = MatrixForm::from_fn(grid, 0, 1, |_, p, out| {
        let x = grid.coords(p);
        out[0] = i_unit * f(&x[..theta]);
    });
    if k == 0 {
        return ConnectionPair::new(MatrixForm::zeros(grid, 1, 1), phi, true);
    }
    if 2 * k > theta || grid.axes()[..2 * k].iter().any(|a| a.kind == AxisKind::Periodic) {
        return Err(Error::UnsupportedDomain(format!(
            "witness with k = {k} needs {} non-periodic base axes",
            2 * k
        )));
    }
    let scale = T::lit(default_rho_scale(k));
    let default = move |t: T| scale * (T::one() - t.cos());
    let profile: &(dyn Fn(T) -> T + Sync) = match rho {
        Some(r) => r,
        None => &default,
    };
    let ax = &grid.axes()[theta];
    if profile(T::zero()).abs() > T::lit(1e-12) {
        return Err(Error::InvalidArgument("rho must vanish at theta = 0".into()));
    }
    let integral: T = ax
        .coords
        .iter()
        .zip(&ax.weights)
        .map(|(&t, &w)| profile(t).powi(k as i32) * w)
        .sum();
    let want = (T::lit(2.0) * T::PI()).powi(k as i32 + 1);
    if (integral - want).abs() > T::lit(1e-8) * want {
        return Err(Error::InvalidArgument(format!(
            "rho normalization: int rho^{k} = {integral}, expected {want}"
        )));
    }
    let a = MatrixForm::from_fn(grid, 1, 1, |mask, p, out| {
        let axis = mask.trailing_zeros() as usize;
        if axis < 2 * k && axis % 2 == 1 {
            let x = grid.coords(p);
            out[0] = i_unit * (profile(x[theta]) * x[axis - 1]);
        }
    });
    ConnectionPair::new(a, phi, true)
}

/// Pairing `<X, Y> = -8 pi^2 tr_2(X, Y)` (equal to `tr(X ^ Y)`).
pub fn killing_pairing<T: Real>(x: &MatrixForm<T>, y: &MatrixForm<T>) -> Result<MatrixForm<T>> {
    Ok(sym_trace(&[x, y])?.scale_real(T::lit(-8.0) * T::PI() * T::PI()))
}

/// Pieces of the gerbe comparison for a unitary pair: the degree-2 total
/// string potential `S_2`, the curving
/// `B = (1/2 pi i) int <F, Phi> - 1/2 <A, d_theta A>` and
/// `E = d int <A, Phi>`.
pub struct GerbeTerms<T: Real> {
    pub s2: MatrixForm<T>,
    pub b: MatrixForm<T>,
    pub exact: MatrixForm<T>,
}

pub fn gerbe_terms<T: Real>(p: &ConnectionPair<T>) -> Result<GerbeTerms<T>> {
    if !p.is_unitary() {
        return Err(Error::InvalidArgument("the gerbe curving needs a unitary pair".into()));
    }
    let base = p.grid().remove_axis(p.theta_axis())?;
    let f = p.base_curvature();
    let da = p.a().partial(p.theta_axis())?;
    let mut integrand = killing_pairing(&f, p.phi())?;
    integrand.axpy(real(T::lit(-0.5)), &killing_pairing(p.a(), &da)?)?;
    let b = circle_integral(&integrand)?.scale(inv_two_pi_i::<T>());
    let exact = circle_integral(&killing_pairing(p.a(), p.phi())?)?.d();
    let s2 = total_string_potential(p, 2)?
        .get(2)
        .cloned()
        .unwrap_or_else(|| MatrixForm::zeros(&base, 2, 1));
    Ok(GerbeTerms { s2, b, exact })
}

/// `sup |S_2 - (1/2 pi i) B - kappa E|`.
pub fn gerbe_defect<T: Real>(terms: &GerbeTerms<T>, kappa: T) -> Result<T> {
    let mut r = terms.s2.clone();
    r.axpy(-inv_two_pi_i::<T>(), &terms.b)?;
    r.axpy(real(-kappa), &terms.exact)?;
    Ok(r.max_abs())
}

/// Gerbe curving comparison with the exact term `d((1/4 pi^2) int <A, Phi>)`:
/// returns `B` and the defect.
pub fn gerbe_curving_check<T: Real>(p: &ConnectionPair<T>) -> Result<(MatrixForm<T>, T)> {
    let terms = gerbe_terms(p)?;
    let kappa = T::one() / (T::lit(4.0) * T::PI() * T::PI());
    let defect = gerbe_defect(&terms, kappa)?;
    Ok((terms.b, defect))
}

/// String-datum defect of two pairs: the potential of the straight line
/// between them and, on torus bases, its per-degree exactness reports.
#[derive(Clone, Debug)]
pub struct StringDatumDefect<T: Real> {
    pub form: GradedForm<T>,
    /// `None` when the base is not a torus.
    pub reports: Option<Vec<ExactnessReport<T>>>,
}

pub fn string_datum_defect<T: Real>(
    p0: &ConnectionPair<T>,
    p1: &ConnectionPair<T>,
    cutoff: usize,
    exact_tol: T,
) -> Result<StringDatumDefect<T>> {
    let path = PairPath::straight_line(p0.clone(), p1.clone())?;
    let form = string_potential(&path, cutoff, PotentialAlgorithm::Explicit, None)?;
    let reports = match form.is_exact(exact_tol) {
        Ok(r) => Some(r),
        Err(Error::UnsupportedDomain(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(StringDatumDefect { form, reports })
}
