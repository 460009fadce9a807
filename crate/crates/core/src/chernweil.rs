//! Chern character, odd Chern character and Chern-Simons forms.
//!
//! Cutoffs count terms: the even character keeps `j = 0..=cutoff` (degree
//! `2j`), the odd character `j = 0..=cutoff` (degree `2j + 1`) and
//! Chern-Simons forms `j = 1..=cutoff` (degree `2j - 1`). Terms above the
//! grid dimension are dropped.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::forms::{GradedForm, MatrixForm, Parity};
use crate::geometry::{curvature, path_grid, t_nodes};
use crate::grid::{same_grid, Factor, Grid};
use crate::lie::GroupMap;
use crate::quadrature;
use crate::scalar::{factorial, inv_two_pi_i, Real, C};

/// Cutoff producing every degree representable on a `dim`-dimensional grid.
pub fn default_cutoff(dim: usize) -> usize {
    dim.div_ceil(2)
}

fn real<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// `sum_j (1/j!) (1/2 pi i)^j tr(F^j)` with `F = da + a ^ a`.
pub fn chern_character<T: Real>(a: &MatrixForm<T>, cutoff: usize) -> Result<GradedForm<T>> {
    if a.degree() != 1 {
        return Err(Error::Degree("connection must be a 1-form".into()));
    }
    chern_character_of_curvature(&curvature(a), cutoff)
}

/// Even Chern character of a given curvature 2-form.
pub fn chern_character_of_curvature<T: Real>(f: &MatrixForm<T>, cutoff: usize) -> Result<GradedForm<T>> {
    let grid = f.grid();
    let n = f.rank();
    let mut out = GradedForm::new(Parity::Even);
    out.insert(MatrixForm::scalar_fn(grid, |_| real(T::of(n))))?;
    let mut power = f.clone();
    for j in 1..=cutoff {
        if 2 * j > grid.dim() {
            break;
        }
        if j > 1 {
            power = power.wedge(f)?;
        }
        let c = inv_two_pi_i::<T>().powu(j as u32) / factorial::<T>(j);
        out.insert(power.trace().scale(c))?;
    }
    Ok(out)
}

/// Coefficient `-j!/(2j+1)! (-1/2 pi i)^{j+1}` of `tr(Theta^{2j+1})`.
pub fn odd_chern_coefficient<T: Real>(j: usize) -> C<T> {
    let minus = -inv_two_pi_i::<T>();
    minus.powu(j as u32 + 1) * (-factorial::<T>(j) / factorial::<T>(2 * j + 1))
}

/// `sum_j -j!/(2j+1)! (-1/2 pi i)^{j+1} tr((g^{-1} dg)^{2j+1})`.
pub fn odd_chern_character<T: Real>(g: &GroupMap<T>, cutoff: usize) -> Result<GradedForm<T>> {
    odd_chern_of_maurer_cartan(&g.maurer_cartan(), cutoff)
}

/// Odd Chern character from a Maurer-Cartan form.
pub fn odd_chern_of_maurer_cartan<T: Real>(theta: &MatrixForm<T>, cutoff: usize) -> Result<GradedForm<T>> {
    let dim = theta.grid().dim();
    let mut out = GradedForm::new(Parity::Odd);
    let sq = theta.wedge(theta)?;
    let mut power = theta.clone();
    for j in 0..=cutoff {
        if 2 * j + 1 > dim {
            break;
        }
        if j > 0 {
            power = power.wedge(&sq)?;
        }
        out.insert(power.trace().scale(odd_chern_coefficient(j)))?;
    }
    Ok(out)
}

/// A path of connection 1-forms over `t in [0, 1]`.
#[derive(Clone, Debug)]
pub enum ConnectionPath<T: Real> {
    StraightLine {
        a0: MatrixForm<T>,
        a1: MatrixForm<T>,
    },
    /// Forms sampled at the nodes of a non-periodic factor over `[0, 1]`.
    Sampled {
        t_factor: Factor,
        forms: Vec<MatrixForm<T>>,
    },
}

impl<T: Real> ConnectionPath<T> {
    pub fn straight_line(a0: MatrixForm<T>, a1: MatrixForm<T>) -> Result<Self> {
        if a0.degree() != 1 || a1.degree() != 1 {
            return Err(Error::Degree("connections must be 1-forms".into()));
        }
        if !same_grid(a0.grid(), a1.grid()) {
            return Err(Error::GridMismatch);
        }
        if a0.rank() != a1.rank() {
            return Err(Error::RankMismatch(a0.rank(), a1.rank()));
        }
        Ok(Self::StraightLine { a0, a1 })
    }

    pub fn sampled(t_factor: Factor, forms: Vec<MatrixForm<T>>) -> Result<Self> {
        let nodes = t_nodes::<T>(&t_factor)?;
        if forms.len() != nodes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} forms for {} parameter samples",
                forms.len(),
                nodes.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("a sampled path needs two samples".into()));
        }
        Ok(Self::Sampled { t_factor, forms })
    }

    /// Sample a straight line at the nodes of `t_factor`.
    pub fn sample(&self, t_factor: Factor) -> Result<Self> {
        match self {
            Self::StraightLine { a0, a1 } => {
                let forms = t_nodes::<T>(&t_factor)?
                    .into_iter()
                    .map(|t| lerp(a0, a1, t))
                    .collect::<Result<Vec<_>>>()?;
                Self::sampled(t_factor, forms)
            }
            Self::Sampled { .. } => Ok(self.clone()),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        match self {
            Self::StraightLine { a0, .. } => a0.grid(),
            Self::Sampled { forms, .. } => forms[0].grid(),
        }
    }

    /// `(t_k, w_k, a_{t_k}, a'_{t_k})` quadrature data of the path.
    ///
    /// Straight lines use Gauss-Legendre with `nodes` points; sampled paths
    /// use their own nodes, weights and differentiation rule.
    pub fn quadrature_data(&self, nodes: usize) -> Result<Vec<(T, MatrixForm<T>, MatrixForm<T>)>> {
        match self {
            Self::StraightLine { a0, a1 } => {
                let velocity = a1.sub(a0)?;
                let (ts, ws) = quadrature::gauss_legendre(nodes, T::zero(), T::one());
                ts.into_iter()
                    .zip(ws)
                    .map(|(t, w)| Ok((w, lerp(a0, a1, t)?, velocity.clone())))
                    .collect()
            }
            Self::Sampled { t_factor, forms } => {
                let tg = Grid::<T>::new(crate::grid::GridSpec::new(vec![t_factor.clone()], None))?;
                let ax = &tg.axes()[0];
                (0..forms.len())
                    .map(|k| {
                        let mut v = MatrixForm::zeros(forms[0].grid(), 1, forms[0].rank());
                        for (m, w) in ax.derivative_row(k) {
                            v.axpy(real(w), &forms[m])?;
                        }
                        Ok((ax.weights[k], forms[k].clone(), v))
                    })
                    .collect()
            }
        }
    }
}

fn lerp<T: Real>(a0: &MatrixForm<T>, a1: &MatrixForm<T>, t: T) -> Result<MatrixForm<T>> {
    let mut out = a0.scale_real(T::one() - t);
    out.axpy(real(t), a1)?;
    Ok(out)
}

/// `sum_j 1/(j-1)! (1/2 pi i)^j int_0^1 tr(a'_t ^ F_t^{j-1}) dt`.
///
/// Straight lines integrate in `t` with `cutoff + 1` Gauss-Legendre nodes,
/// which is exact for the polynomial integrand.
pub fn chern_simons<T: Real>(path: &ConnectionPath<T>, cutoff: usize) -> Result<GradedForm<T>> {
    let grid = path.grid().clone();
    let dim = grid.dim();
    let mut out = GradedForm::new(Parity::Odd);
    for (w, a, v) in path.quadrature_data(cutoff + 1)? {
        let f = curvature(&a);
        let mut chain = v.clone();
        for j in 1..=cutoff {
            if 2 * j - 1 > dim {
                break;
            }
            if j > 1 {
                chain = chain.wedge(&f)?;
            }
            let c = inv_two_pi_i::<T>().powu(j as u32) * (w / factorial::<T>(j - 1));
            out.insert(chain.trace().scale(c))?;
        }
    }
    Ok(out)
}

/// Materialize a connection path as a single 1-form on the grid with the
/// parameter axis inserted (before the distinguished circle, if any); the
/// form has no `dt` component.
pub fn materialize<T: Real>(
    path: &ConnectionPath<T>,
    t_factor: &Factor,
) -> Result<(MatrixForm<T>, usize)> {
    let sampled = path.sample(t_factor.clone())?;
    let ConnectionPath::Sampled { t_factor, forms } = &sampled else {
        unreachable!("sample always returns a sampled path")
    };
    let (big, t_axis) = path_grid(path.grid(), t_factor)?;
    Ok((MatrixForm::stack(&big, t_axis, forms)?, t_axis))
}

/// Chern-Simons form as `int_0^1 slice_t(i_{d/dt} Ch(a)) dt` for the
/// connection `a` on `M x [0, 1]` induced by the path.
///
/// Straight lines are sampled at the nodes of `t_factor`.
pub fn chern_simons_via_slices<T: Real>(
    path: &ConnectionPath<T>,
    cutoff: usize,
    t_factor: &Factor,
) -> Result<GradedForm<T>> {
    let (big, t_axis) = match path {
        ConnectionPath::Sampled { t_factor, .. } => materialize(path, t_factor)?,
        ConnectionPath::StraightLine { .. } => materialize(path, t_factor)?,
    };
    let ch = chern_character(&big, cutoff)?;
    let mut out = GradedForm::new(Parity::Odd);
    for (&deg, form) in ch.terms() {
        if deg == 0 {
            continue;
        }
        out.insert(form.contract(t_axis)?.integrate_slices(t_axis)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::scalar::{im, re};

    fn torus(n: &[usize]) -> Arc<Grid<f64>> {
        Grid::new(GridSpec::torus(n)).unwrap()
    }

    #[test]
    fn trivial_connection_character() {
        let g = torus(&[8, 8, 8, 8]);
        let ch = chern_character(&MatrixForm::zeros(&g, 1, 3), 3).unwrap();
        assert_eq!(ch.degrees(), vec![0, 2, 4]);
        assert!((ch.get(0).unwrap().at(0, 5)[0] - re(3.0)).norm() == 0.0);
        assert_eq!(ch.get(2).unwrap().max_abs(), 0.0);
        assert_eq!(ch.get(4).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn default_cutoff_values() {
        assert_eq!(default_cutoff(1), 1);
        assert_eq!(default_cutoff(3), 2);
        assert_eq!(default_cutoff(4), 2);
    }

    #[test]
    fn winding_of_phase_map() {
        let g = torus(&[32]);
        for k in -3i32..=3 {
            let m = GroupMap::from_fn(&g, 1, true, false, |p, out| {
                out[0] = im(k as f64 * g.coords(p)[0]).exp();
            })
            .unwrap();
            let ch = odd_chern_character(&m, 2).unwrap();
            let total = ch.get(1).unwrap().integrate().unwrap()[0];
            assert!((total - re(k as f64)).norm() < 1e-12, "k={k} got {total}");
        }
    }

    #[test]
    fn constant_map_has_vanishing_odd_character() {
        let g = torus(&[8, 8, 8]);
        let m = GroupMap::constant(&g, &[re(0.0), im(1.0), im(1.0), re(0.0)], 2, true).unwrap();
        assert!(odd_chern_character(&m, 2).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn constant_path_has_zero_chern_simons() {
        let g = torus(&[8, 8, 8]);
        let a = MatrixForm::from_fn(&g, 1, 1, |mask, p, out| out[0] = im((mask as f64) * g.coords(p)[0].sin()));
        let path = ConnectionPath::straight_line(a.clone(), a).unwrap();
        assert_eq!(chern_simons(&path, 2).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn line_to_constant_loop_connection() {
        // d -> d + i f dtheta: CS = f dtheta / 2 pi
        let g = Grid::<f64>::new(GridSpec::torus_with_loop(&[16], 16)).unwrap();
        let f = |x: &[f64]| 0.4 + x[0].cos();
        let a1 = MatrixForm::from_fn(&g, 1, 1, |mask, p, out| {
            if mask == 0b10 {
                out[0] = im(f(&g.coords(p)));
            }
        });
        let path = ConnectionPath::straight_line(MatrixForm::zeros(&g, 1, 1), a1).unwrap();
        let cs = chern_simons(&path, 1).unwrap();
        let s = cs.get(1).unwrap().fiber_integrate().unwrap();
        for q in 0..16 {
            let want = f(&s.grid().coords(q));
            assert!((s.at(0, q)[0] - re(want)).norm() < 1e-13);
        }
    }
}
