//! Sampled maps into matrix groups and loop-group utilities.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::MatrixForm;
use crate::grid::{same_grid, Grid};
use crate::linalg;
use crate::quadrature;
use crate::scalar::{Real, C};

/// Tolerance of the unitarity check on construction.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance of the basedness check on construction.
pub const BASED_TOL: f64 = 1e-12;

/// A sampled smooth map from a grid into `GL(n, C)`.
#[derive(Clone, Debug)]
pub struct GroupMap<T: Real> {
    grid: Arc<Grid<T>>,
    rank: usize,
    values: Vec<C<T>>,
    unitary: bool,
    based: bool,
}

impl<T: Real> GroupMap<T> {
    /// Validate and wrap per-point matrices (row-major, point-major).
    pub fn new(
        grid: &Arc<Grid<T>>,
        rank: usize,
        values: Vec<C<T>>,
        unitary: bool,
        based: bool,
    ) -> Result<Self> {
        let block = rank * rank;
        if rank == 0 || values.len() != grid.len() * block {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} points of rank {rank}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(p) = values
            .par_chunks(block)
            .position_first(|m| linalg::inverse(m, rank).is_none())
        {
            return Err(Error::Singular(p));
        }
        let map = Self {
            grid: grid.clone(),
            rank,
            values,
            unitary,
            based,
        };
        if unitary {
            let defect = map.unitarity_defect();
            if defect > T::lit(UNITARY_TOL) {
                return Err(Error::Invariant(format!("unitarity defect {defect:e}")));
            }
        }
        if based {
            let defect = map.basedness_defect()?;
            if defect > T::lit(BASED_TOL) {
                return Err(Error::Invariant(format!("basedness defect {defect:e}")));
            }
        }
        Ok(map)
    }

    /// Map whose value at point `p` is written by `f(p, out)`.
    pub fn from_fn<F>(grid: &Arc<Grid<T>>, rank: usize, unitary: bool, based: bool, f: F) -> Result<Self>
    where
        F: Fn(usize, &mut [C<T>]) + Sync,
    {
        let block = rank * rank;
        let mut values = vec![Complex::zero(); grid.len() * block];
        values
            .par_chunks_mut(block)
            .with_min_len(64)
            .enumerate()
            .for_each(|(p, out)| f(p, out));
        Self::new(grid, rank, values, unitary, based)
    }

    /// Constant map with the given matrix value.
    pub fn constant(grid: &Arc<Grid<T>>, value: &[C<T>], rank: usize, unitary: bool) -> Result<Self> {
        let based = grid.distinguished_axis().is_some()
            && linalg::max_abs_diff(value, &linalg::identity::<T>(rank)) == T::zero();
        Self::from_fn(grid, rank, unitary, based, |_, out| out.copy_from_slice(value))
    }

    pub fn identity(grid: &Arc<Grid<T>>, rank: usize) -> Self {
        Self::constant(grid, &linalg::identity::<T>(rank), rank, true).expect("identity is valid")
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn value(&self, p: usize) -> &[C<T>] {
        let b = self.rank * self.rank;
        &self.values[p * b..(p + 1) * b]
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn is_based(&self) -> bool {
        self.based
    }

    /// `sup |g* g - I|`.
    pub fn unitarity_defect(&self) -> T {
        let n = self.rank;
        let id = linalg::identity::<T>(n);
        self.values
            .par_chunks(n * n)
            .map(|m| linalg::max_abs_diff(&linalg::matmul(&linalg::adjoint(m, n), m, n), &id))
            .reduce(T::zero, T::max)
    }

    /// `sup |g(., theta = 0) - I|` over the distinguished circle's zero slice.
    pub fn basedness_defect(&self) -> Result<T> {
        let theta = self.grid.distinguished_axis().ok_or(Error::NoDistinguishedCircle)?;
        let id = linalg::identity::<T>(self.rank);
        Ok((0..self.grid.len())
            .filter(|&p| self.grid.index_along(p, theta) == 0)
            .map(|p| linalg::max_abs_diff(self.value(p), &id))
            .fold(T::zero(), T::max))
    }

    /// The map as a matrix-valued function.
    pub fn as_function(&self) -> MatrixForm<T> {
        MatrixForm::function(&self.grid, self.rank, self.values.clone()).expect("shape is consistent")
    }

    /// Pointwise inverse.
    pub fn pointwise_inverse(&self) -> Self {
        let n = self.rank;
        let values = self
            .values
            .par_chunks(n * n)
            .flat_map_iter(|m| linalg::inverse(m, n).expect("values are invertible"))
            .collect();
        Self {
            values,
            ..self.clone()
        }
    }

    /// Pointwise block sum `g (+) h`.
    pub fn block_sum(&self, other: &Self) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let (na, nb) = (self.rank, other.rank);
        let values = self
            .values
            .chunks(na * na)
            .zip(other.values.chunks(nb * nb))
            .flat_map(|(a, b)| linalg::block_diag(a, na, b, nb))
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            rank: na + nb,
            values,
            unitary: self.unitary && other.unitary,
            based: self.based && other.based,
        })
    }

    /// Left-invariant Maurer-Cartan form `g^{-1} dg`.
    pub fn maurer_cartan(&self) -> MatrixForm<T> {
        let all = (1u32 << self.grid.dim()) - 1;
        self.maurer_cartan_axes(all)
    }

    /// `g^{-1} d g` using only the axes in `axes_mask`.
    pub fn maurer_cartan_axes(&self, axes_mask: u32) -> MatrixForm<T> {
        let g = self.as_function();
        self.pointwise_inverse()
            .as_function()
            .wedge(&g.d_axes(axes_mask))
            .expect("same grid and rank")
    }

    /// `g^{-1} partial_axis g` as a matrix-valued function.
    pub fn log_derivative(&self, axis: usize) -> Result<MatrixForm<T>> {
        let dg = self.as_function().partial(axis)?;
        self.pointwise_inverse().as_function().wedge(&dg)
    }

    /// Restriction to the sub-grid with `axis` fixed at sample `index`.
    pub fn slice(&self, axis: usize, index: usize) -> Result<Self> {
        let f = self.as_function().slice(axis, index)?;
        let based = self.based && f.grid().distinguished_axis().is_some();
        Ok(Self {
            grid: f.grid().clone(),
            rank: self.rank,
            values: f.into_components().remove(0),
            unitary: self.unitary,
            based,
        })
    }

    /// Pointwise product `g h`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let f = self.as_function().wedge(&other.as_function())?;
        Ok(Self {
            grid: self.grid.clone(),
            rank: self.rank,
            values: f.into_components().remove(0),
            unitary: self.unitary && other.unitary,
            based: self.based && other.based,
        })
    }
}

/// `R_t`: block rotation `[[cos t, -sin t], [sin t, cos t]]` with `n x n`
/// identity blocks.
fn rotation<T: Real>(n: usize, t: T) -> Vec<C<T>> {
    let (s, c) = t.sin_cos();
    let m = 2 * n;
    let mut r = vec![Complex::zero(); m * m];
    for i in 0..n {
        r[i * m + i] = Complex::new(c, T::zero());
        r[i * m + n + i] = Complex::new(-s, T::zero());
        r[(n + i) * m + i] = Complex::new(s, T::zero());
        r[(n + i) * m + n + i] = Complex::new(c, T::zero());
    }
    r
}

/// Value of the rotation homotopy
/// `X_t = diag(g, 1) R_t diag(1, g^{-1}) R_{-t}` at one point.
///
/// The endpoints are returned exactly: `X_0 = diag(g, g^{-1})` and
/// `X_{pi/2} = I`.
pub fn rotation_value<T: Real>(g: &[C<T>], g_inv: &[C<T>], n: usize, t: T) -> Vec<C<T>> {
    let id = linalg::identity::<T>(n);
    if t == T::zero() {
        return linalg::block_diag(g, n, g_inv, n);
    }
    if t == T::FRAC_PI_2() {
        return linalg::identity::<T>(2 * n);
    }
    let left = linalg::block_diag(g, n, &id, n);
    let mid = linalg::block_diag(&id, n, g_inv, n);
    let m = 2 * n;
    let x = linalg::matmul(&left, &rotation(n, t), m);
    let x = linalg::matmul(&x, &mid, m);
    linalg::matmul(&x, &rotation(n, -t), m)
}

/// Rotation homotopy `X_t` from `g (+) g^{-1}` (`t = 0`) to the identity
/// (`t = pi/2`).
pub fn rotation_homotopy<T: Real>(g: &GroupMap<T>, t: T) -> Result<GroupMap<T>> {
    let inv = g.pointwise_inverse();
    let n = g.rank();
    let mut out = GroupMap::from_fn(g.grid(), 2 * n, false, false, |p, dst| {
        dst.copy_from_slice(&rotation_value(g.value(p), inv.value(p), n, t));
    })?;
    out.unitary = g.unitary;
    out.based = g.based;
    Ok(out)
}

/// Rotation homotopy materialized on `big = M x [0, 1]` (the last axis, a
/// non-periodic factor over `[0, 1]`), with `t = s pi / 2`.
pub fn rotation_homotopy_family<T: Real>(g: &GroupMap<T>, big: &Arc<Grid<T>>) -> Result<GroupMap<T>> {
    let s_axis = big.dim() - 1;
    let base = big.remove_axis(s_axis)?;
    if !same_grid(&base, g.grid()) {
        return Err(Error::GridMismatch);
    }
    let ax = &big.axes()[s_axis];
    if ax.lo != T::zero() || ax.hi != T::one() {
        return Err(Error::InvalidGrid("homotopy parameter must range over [0, 1]".into()));
    }
    let inv = g.pointwise_inverse();
    let n = g.rank();
    let ns = ax.n;
    GroupMap::from_fn(big, 2 * n, g.unitary, false, |p, dst| {
        let k = p % ns;
        let q = p / ns;
        let t = if k == 0 {
            T::zero()
        } else if k == ns - 1 {
            T::FRAC_PI_2()
        } else {
            ax.coords[k] * T::FRAC_PI_2()
        };
        dst.copy_from_slice(&rotation_value(g.value(q), inv.value(q), n, t));
    })
}

/// Matrix exponential.
pub fn matrix_exp<T: Real>(x: &[C<T>], n: usize) -> Vec<C<T>> {
    linalg::expm(x, n)
}

/// Holonomy of a loop in `gl(n)`: solves `g' = g Phi(theta)`, `g(0) = I`
/// over `[0, 2 pi]` with classical RK4 in `steps` uniform steps, using
/// trigonometric interpolation of the `N` equispaced samples of `Phi`
/// (point-major `n x n` blocks). With `unitary` set, each step is followed
/// by a polar projection onto `U(n)`.
pub fn holonomy<T: Real>(phi: &[C<T>], n: usize, steps: usize, unitary: bool) -> Result<Vec<C<T>>> {
    if steps < 8 {
        return Err(Error::InvalidArgument(format!("holonomy needs at least 8 steps, got {steps}")));
    }
    let block = n * n;
    if block == 0 || phi.len() % block != 0 || phi.len() / block < 2 {
        return Err(Error::ShapeMismatch("holonomy loop samples".into()));
    }
    let samples = phi.len() / block;
    let two_pi = T::lit(2.0) * T::PI();
    let h = two_pi / T::of(steps);
    let at = |theta: T| -> Vec<C<T>> {
        let w = quadrature::periodic_interp_weights(samples, two_pi, theta);
        let mut out = vec![Complex::zero(); block];
        for (k, &wk) in w.iter().enumerate() {
            if wk == T::zero() {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&phi[k * block..(k + 1) * block]) {
                *o += *v * wk;
            }
        }
        out
    };
    let rhs = |g: &[C<T>], f: &[C<T>]| linalg::matmul(g, f, n);
    let axpy = |g: &[C<T>], k: &[C<T>], s: T| -> Vec<C<T>> {
        g.iter().zip(k).map(|(a, b)| *a + *b * s).collect()
    };
    let mut g = linalg::identity::<T>(n);
    let half = h / T::lit(2.0);
    let mut f0 = at(T::zero());
    for step in 0..steps {
        let theta = h * T::of(step);
        let f_mid = at(theta + half);
        let f1 = at(h * T::of(step + 1));
        let k1 = rhs(&g, &f0);
        let k2 = rhs(&axpy(&g, &k1, half), &f_mid);
        let k3 = rhs(&axpy(&g, &k2, half), &f_mid);
        let k4 = rhs(&axpy(&g, &k3, h), &f1);
        let sixth = h / T::lit(6.0);
        for i in 0..block {
            g[i] += (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]) * sixth;
        }
        if unitary {
            g = linalg::polar_unitary(&g, n);
        }
        f0 = f1;
    }
    Ok(g)
}

/// Default number of RK4 steps for a loop sampled at `samples` points.
pub fn default_ode_steps(samples: usize) -> usize {
    (32 * samples).max(1024)
}

/// The identity map of SU(2) in the Euler chart of the 3-sphere factor:
/// `e^{i phi s3/2} e^{i theta s2/2} e^{-i phi s3/2} e^{i psi s3/2}`.
pub fn sphere_identity_map<T: Real>(grid: &Arc<Grid<T>>) -> Result<GroupMap<T>> {
    let fi = grid
        .spec()
        .factors
        .iter()
        .position(|f| matches!(f, crate::grid::Factor::EulerSphere3 { .. }))
        .ok_or_else(|| Error::UnsupportedDomain("the grid has no 3-sphere chart".into()))?;
    let first = grid.factor_axis(fi).expect("chart axes exist");
    let half = T::lit(0.5);
    let diag = |a: T| {
        let z = Complex::from_polar(T::one(), a * half);
        [z, C::zero(), C::zero(), z.conj()]
    };
    GroupMap::from_fn(grid, 2, true, false, |p, out| {
        let x = grid.coords(p);
        let (psi, theta, phi) = (x[first], x[first + 1], x[first + 2]);
        let (s, c) = (theta * half).sin_cos();
        let rot = [Complex::new(c, T::zero()), Complex::new(s, T::zero()), Complex::new(-s, T::zero()), Complex::new(c, T::zero())];
        let m = linalg::matmul(&diag(phi), &rot, 2);
        let m = linalg::matmul(&m, &diag(-phi), 2);
        out.copy_from_slice(&linalg::matmul(&m, &diag(psi), 2));
    })
}
