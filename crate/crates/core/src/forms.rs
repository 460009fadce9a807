//! Matrix-valued differential forms on a [`Grid`].
//!
//! A degree-`p` form of rank `n` stores, for every increasing multi-index of
//! length `p` (a bitmask over grid axes), one `n x n` complex matrix per grid
//! point. Multi-indices follow the grid's lexicographic basis order.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{same_grid, Grid};
use crate::linalg;
use crate::scalar::{factorial, inv_two_pi_i, Real, C};

const MIN_PAR: usize = 128;

/// Sign of `dx^I ^ dx^J` relative to `dx^{I u J}`: `(-1)^{#{(i, j) : i > j}}`.
#[inline]
pub fn shuffle_sign(i: u32, j: u32) -> i32 {
    let mut count = 0u32;
    let mut rest = j;
    while rest != 0 {
        let b = rest.trailing_zeros();
        count += (i >> (b + 1)).count_ones();
        rest &= rest - 1;
    }
    if count % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Number of set bits of `mask` strictly below `axis`.
#[inline]
fn rank_below(mask: u32, axis: usize) -> u32 {
    (mask & ((1u32 << axis) - 1)).count_ones()
}

#[inline]
fn drop_bit(mask: u32, axis: usize) -> u32 {
    let low = (1u32 << axis) - 1;
    (mask & low) | ((mask >> (axis + 1)) << axis)
}

#[inline]
fn insert_bit(mask: u32, axis: usize) -> u32 {
    let low = (1u32 << axis) - 1;
    (mask & low) | ((mask >> axis) << (axis + 1))
}

/// Axis list of a bitmask, increasing.
pub fn mask_axes(mask: u32) -> Vec<usize> {
    (0..32).filter(|a| mask & (1 << a) != 0).collect()
}

pub fn axes_mask(axes: &[usize]) -> u32 {
    axes.iter().fold(0, |m, &a| m | (1 << a))
}

/// Point index of the parent grid for point `q` of a grid with `axis`
/// removed, at sample `index` along the removed axis.
#[inline]
fn parent_point(q: usize, inner: usize, n_axis: usize, index: usize) -> usize {
    (q / inner) * inner * n_axis + index * inner + q % inner
}

/// A homogeneous matrix-valued differential form.
#[derive(Clone, Debug)]
pub struct MatrixForm<T: Real> {
    grid: Arc<Grid<T>>,
    degree: usize,
    rank: usize,
    coeffs: Vec<Vec<C<T>>>,
}

impl<T: Real> MatrixForm<T> {
    pub fn zeros(grid: &Arc<Grid<T>>, degree: usize, rank: usize) -> Self {
        let count = grid.basis(degree).len();
        let len = grid.len() * rank * rank;
        Self {
            grid: grid.clone(),
            degree,
            rank,
            coeffs: vec![vec![Complex::zero(); len]; count],
        }
    }

    /// Form from explicit coefficient arrays in basis order.
    pub fn from_components(
        grid: &Arc<Grid<T>>,
        degree: usize,
        rank: usize,
        coeffs: Vec<Vec<C<T>>>,
    ) -> Result<Self> {
        let count = grid.basis(degree).len();
        if coeffs.len() != count {
            return Err(Error::ShapeMismatch(format!(
                "degree {degree} needs {count} components, got {}",
                coeffs.len()
            )));
        }
        let len = grid.len() * rank * rank;
        if let Some(c) = coeffs.iter().find(|c| c.len() != len) {
            return Err(Error::ShapeMismatch(format!(
                "component has {} entries, expected {len}",
                c.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            degree,
            rank,
            coeffs,
        })
    }

    /// Form whose coefficient matrix for multi-index `mask` at point `p` is
    /// written by `f(mask, p, out)`; `out` starts zeroed.
    pub fn from_fn<F>(grid: &Arc<Grid<T>>, degree: usize, rank: usize, f: F) -> Self
    where
        F: Fn(u32, usize, &mut [C<T>]) + Sync,
    {
        let block = rank * rank;
        let coeffs = grid
            .basis(degree)
            .iter()
            .map(|&mask| {
                let mut v = vec![Complex::zero(); grid.len() * block];
                v.par_chunks_mut(block)
                    .with_min_len(MIN_PAR)
                    .enumerate()
                    .for_each(|(p, out)| f(mask, p, out));
                v
            })
            .collect();
        Self {
            grid: grid.clone(),
            degree,
            rank,
            coeffs,
        }
    }

    /// Degree-0 form from per-point matrices.
    pub fn function(grid: &Arc<Grid<T>>, rank: usize, values: Vec<C<T>>) -> Result<Self> {
        Self::from_components(grid, 0, rank, vec![values])
    }

    /// Scalar function sampled from coordinates.
    pub fn scalar_fn<F>(grid: &Arc<Grid<T>>, f: F) -> Self
    where
        F: Fn(&[T]) -> C<T> + Sync,
    {
        Self::from_fn(grid, 0, 1, |_, p, out| out[0] = f(&grid.coords(p)))
    }

    /// Constant identity matrix function of the given rank.
    pub fn identity(grid: &Arc<Grid<T>>, rank: usize) -> Self {
        let id = linalg::identity::<T>(rank);
        Self::from_fn(grid, 0, rank, |_, _, out| out.copy_from_slice(&id))
    }

    /// Coordinate 1-form `dx^axis` (scalar).
    pub fn coordinate_one_form(grid: &Arc<Grid<T>>, axis: usize) -> Result<Self> {
        grid.axis(axis)?;
        let target = 1u32 << axis;
        Ok(Self::from_fn(grid, 1, 1, |mask, _, out| {
            if mask == target {
                out[0] = Complex::one();
            }
        }))
    }

    /// Degree-1 form from one coefficient array per axis.
    pub fn one_form(grid: &Arc<Grid<T>>, rank: usize, per_axis: Vec<Vec<C<T>>>) -> Result<Self> {
        Self::from_components(grid, 1, rank, per_axis)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of coefficients per grid point and multi-index.
    pub fn block(&self) -> usize {
        self.rank * self.rank
    }

    pub fn components(&self) -> &[Vec<C<T>>] {
        &self.coeffs
    }

    pub fn into_components(self) -> Vec<Vec<C<T>>> {
        self.coeffs
    }

    /// Multi-index bitmasks in component order.
    pub fn masks(&self) -> &[u32] {
        self.grid.basis(self.degree)
    }

    pub fn component(&self, mask: u32) -> &[C<T>] {
        &self.coeffs[self.grid.position(mask)]
    }

    pub fn component_mut(&mut self, mask: u32) -> &mut Vec<C<T>> {
        let i = self.grid.position(mask);
        &mut self.coeffs[i]
    }

    /// Coefficient matrix of multi-index `mask` at point `p`.
    pub fn at(&self, mask: u32, p: usize) -> &[C<T>] {
        let b = self.block();
        &self.component(mask)[p * b..(p + 1) * b]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        if self.rank != other.rank {
            return Err(Error::RankMismatch(self.rank, other.rank));
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::Degree(format!(
                "degree {} vs {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C<T>, C<T>) -> C<T> + Sync) -> Result<Self> {
        self.check_same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Ok(Self {
            coeffs,
            ..self.empty_like()
        })
    }

    fn empty_like(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            degree: self.degree,
            rank: self.rank,
            coeffs: Vec::new(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C<T>, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y * s;
            }
        }
        Ok(())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn neg(&self) -> Self {
        self.map(|z| -z)
    }

    fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.iter().map(|z| f(*z)).collect())
                .collect(),
            ..self.empty_like()
        }
    }

    /// Pointwise conjugate transpose of every coefficient matrix.
    pub fn adjoint(&self) -> Self {
        let n = self.rank;
        let b = self.block();
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.chunks(b).flat_map(|m| linalg::adjoint(m, n)).collect())
                .collect(),
            ..self.empty_like()
        }
    }

    /// Largest coefficient modulus over all components and points.
    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| linalg::max_abs(c))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| linalg::max_abs_diff(a, b))
            .fold(T::zero(), T::max))
    }

    /// Graded wedge product with matrix multiplication of coefficients.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let grid = &self.grid;
        let n = self.rank;
        let block = self.block();
        let degree = self.degree + other.degree;
        let coeffs = grid
            .basis(degree)
            .iter()
            .map(|&k| {
                let terms: Vec<(usize, usize, C<T>)> = self
                    .masks()
                    .iter()
                    .enumerate()
                    .filter(|(_, &i)| i & !k == 0)
                    .map(|(ia, &i)| {
                        let j = k & !i;
                        let s = T::lit(shuffle_sign(i, j) as f64);
                        (ia, grid.position(j), Complex::new(s, T::zero()))
                    })
                    .collect();
                let mut out = vec![Complex::zero(); grid.len() * block];
                out.par_chunks_mut(block)
                    .with_min_len(MIN_PAR)
                    .enumerate()
                    .for_each(|(p, dst)| {
                        let r = p * block..(p + 1) * block;
                        for &(ia, ib, s) in &terms {
                            linalg::gemm_acc(dst, s, &self.coeffs[ia][r.clone()], &other.coeffs[ib][r.clone()], n);
                        }
                    });
                out
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            degree,
            rank: n,
            coeffs,
        })
    }

    /// Trace of `self ^ other` without forming the matrix product.
    pub fn trace_wedge(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let grid = &self.grid;
        let n = self.rank;
        let block = self.block();
        let degree = self.degree + other.degree;
        let coeffs = grid
            .basis(degree)
            .iter()
            .map(|&k| {
                let terms: Vec<(usize, usize, T)> = self
                    .masks()
                    .iter()
                    .enumerate()
                    .filter(|(_, &i)| i & !k == 0)
                    .map(|(ia, &i)| {
                        let j = k & !i;
                        (ia, grid.position(j), T::lit(shuffle_sign(i, j) as f64))
                    })
                    .collect();
                let mut out = vec![Complex::zero(); grid.len()];
                out.par_iter_mut()
                    .with_min_len(MIN_PAR)
                    .enumerate()
                    .for_each(|(p, dst)| {
                        let base = p * block;
                        for &(ia, ib, s) in &terms {
                            let a = &self.coeffs[ia][base..base + block];
                            let b = &other.coeffs[ib][base..base + block];
                            let mut acc = Complex::zero();
                            for i in 0..n {
                                for j in 0..n {
                                    acc += a[i * n + j] * b[j * n + i];
                                }
                            }
                            *dst += acc * s;
                        }
                    });
                out
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            degree,
            rank: 1,
            coeffs,
        })
    }

    /// Graded commutator `[a, b] = a ^ b - (-1)^{pq} b ^ a`.
    pub fn graded_commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.wedge(other)?;
        let ba = other.wedge(self)?;
        if (self.degree * other.degree) % 2 == 0 {
            ab.sub(&ba)
        } else {
            ab.add(&ba)
        }
    }

    /// Partial derivative of every component along `axis`.
    pub fn partial(&self, axis: usize) -> Result<Self> {
        let block = self.block();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| self.grid.differentiate(c, block, axis))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            coeffs,
            ..self.empty_like()
        })
    }

    /// Exterior derivative.
    pub fn d(&self) -> Self {
        let all = (1u32 << self.grid.dim()) - 1;
        self.d_axes(all)
    }

    /// Exterior derivative using only the axes in `axes_mask` (e.g. the
    /// derivative along a base factor of a product).
    pub fn d_axes(&self, axes_mask: u32) -> Self {
        let grid = &self.grid;
        let block = self.block();
        let mut out = Self::zeros(grid, self.degree + 1, self.rank);
        for (ci, &i) in self.masks().iter().enumerate() {
            for axis in 0..grid.dim() {
                let bit = 1u32 << axis;
                if axes_mask & bit == 0 || i & bit != 0 {
                    continue;
                }
                let deriv = grid
                    .differentiate(&self.coeffs[ci], block, axis)
                    .expect("axis and shape are valid");
                let k = i | bit;
                let sign = if rank_below(i, axis) % 2 == 0 { T::one() } else { -T::one() };
                for (o, v) in out.component_mut(k).iter_mut().zip(&deriv) {
                    *o += *v * sign;
                }
            }
        }
        out
    }

    /// Interior product with the coordinate vector field of `axis`.
    pub fn contract(&self, axis: usize) -> Result<Self> {
        self.grid.axis(axis)?;
        if self.degree == 0 {
            return Err(Error::Degree("cannot contract a 0-form".into()));
        }
        let bit = 1u32 << axis;
        let mut out = Self::zeros(&self.grid, self.degree - 1, self.rank);
        for (ci, &i) in self.masks().iter().enumerate() {
            if i & bit == 0 {
                continue;
            }
            let sign = if rank_below(i, axis) % 2 == 0 { T::one() } else { -T::one() };
            for (o, v) in out.component_mut(i & !bit).iter_mut().zip(&self.coeffs[ci]) {
                *o = *v * sign;
            }
        }
        Ok(out)
    }

    /// Keep only the components whose multi-index lies inside `axes_mask`.
    pub fn restrict_axes(&self, axes_mask: u32) -> Self {
        let mut out = self.clone();
        for (c, &m) in out.coeffs.iter_mut().zip(self.grid.basis(self.degree)) {
            if m & !axes_mask != 0 {
                c.iter_mut().for_each(|z| *z = Complex::zero());
            }
        }
        out
    }

    /// Pullback by the slice embedding at sample `index` of `axis`.
    pub fn slice(&self, axis: usize, index: usize) -> Result<Self> {
        let ax = self.grid.axis(axis)?;
        if index >= ax.n {
            return Err(Error::IndexOutOfRange {
                index,
                len: ax.n,
            });
        }
        let sub = self.grid.remove_axis(axis)?;
        let slices = vec![index];
        let weights = vec![T::one()];
        self.collapse_axis(&sub, axis, &slices, &weights)
    }

    /// `sum_k w_k * slice(axis, k)`, i.e. the integral over `axis` of the
    /// components free of `d(axis)` (used for `int_0^1 slice_t(..) dt`).
    pub fn integrate_slices(&self, axis: usize) -> Result<Self> {
        let ax = self.grid.axis(axis)?;
        let sub = self.grid.remove_axis(axis)?;
        let slices: Vec<usize> = (0..ax.n).collect();
        let weights = ax.weights.clone();
        self.collapse_axis(&sub, axis, &slices, &weights)
    }

    fn collapse_axis(
        &self,
        sub: &Arc<Grid<T>>,
        axis: usize,
        slices: &[usize],
        weights: &[T],
    ) -> Result<Self> {
        let block = self.block();
        let bit = 1u32 << axis;
        let inner = self.grid.strides()[axis];
        let n_axis = self.grid.shape()[axis];
        let coeffs = sub
            .basis(self.degree)
            .iter()
            .map(|&m| {
                let src = &self.coeffs[self.grid.position(insert_bit(m, axis))];
                debug_assert_eq!(insert_bit(m, axis) & bit, 0);
                let mut out = vec![Complex::zero(); sub.len() * block];
                out.par_chunks_mut(block)
                    .with_min_len(MIN_PAR)
                    .enumerate()
                    .for_each(|(q, dst)| {
                        for (&k, &w) in slices.iter().zip(weights) {
                            let p = parent_point(q, inner, n_axis, k);
                            for (d, s) in dst.iter_mut().zip(&src[p * block..(p + 1) * block]) {
                                *d += *s * w;
                            }
                        }
                    });
                out
            })
            .collect();
        Ok(Self {
            grid: sub.clone(),
            degree: self.degree,
            rank: self.rank,
            coeffs,
        })
    }

    /// Integration over the distinguished circle: writing
    /// `a = b + c ^ dtheta`, returns `int c dtheta` on the base grid.
    pub fn fiber_integrate(&self) -> Result<Self> {
        let theta = self
            .grid
            .distinguished_axis()
            .ok_or(Error::NoDistinguishedCircle)?;
        let sub = self.grid.remove_axis(theta)?;
        if self.degree == 0 {
            return Ok(Self::zeros(&sub, 0, self.rank));
        }
        let ax = &self.grid.axes()[theta];
        let n_theta = ax.n;
        let block = self.block();
        let bit = 1u32 << theta;
        let coeffs = sub
            .basis(self.degree - 1)
            .iter()
            .map(|&m| {
                let src = &self.coeffs[self.grid.position(m | bit)];
                let mut out = vec![Complex::zero(); sub.len() * block];
                out.par_chunks_mut(block)
                    .with_min_len(MIN_PAR)
                    .enumerate()
                    .for_each(|(q, dst)| {
                        for (k, &w) in ax.weights.iter().enumerate() {
                            let p = q * n_theta + k;
                            for (d, s) in dst.iter_mut().zip(&src[p * block..(p + 1) * block]) {
                                *d += *s * w;
                            }
                        }
                    });
                out
            })
            .collect();
        Ok(Self {
            grid: sub,
            degree: self.degree - 1,
            rank: self.rank,
            coeffs,
        })
    }

    /// Pullback along the projection `big -> self.grid` that forgets `axis`
    /// of `big` (the form becomes constant along `axis`).
    pub fn pullback_product(&self, big: &Arc<Grid<T>>, axis: usize) -> Result<Self> {
        let sub = big.remove_axis(axis)?;
        if !same_grid(&sub, &self.grid) {
            return Err(Error::GridMismatch);
        }
        let block = self.block();
        let inner = big.strides()[axis];
        let n_axis = big.shape()[axis];
        let bit = 1u32 << axis;
        let src_grid = &self.grid;
        Ok(Self::from_fn(big, self.degree, self.rank, |mask, p, out| {
            if mask & bit != 0 {
                return;
            }
            let q = (p / (inner * n_axis)) * inner + p % inner;
            let src = &self.coeffs[src_grid.position(drop_bit(mask, axis))];
            out.copy_from_slice(&src[q * block..(q + 1) * block]);
        }))
    }

    /// Form on `big` whose slice at sample `k` of `axis` is `slices[k]` and
    /// which has no `d(axis)` components.
    pub fn stack(big: &Arc<Grid<T>>, axis: usize, slices: &[Self]) -> Result<Self> {
        let n_axis = big.axis(axis)?.n;
        if slices.len() != n_axis {
            return Err(Error::ShapeMismatch(format!(
                "{} slices for an axis with {n_axis} samples",
                slices.len()
            )));
        }
        let sub = big.remove_axis(axis)?;
        let first = &slices[0];
        for s in slices {
            if !same_grid(&sub, &s.grid) {
                return Err(Error::GridMismatch);
            }
            first.check_same_shape(s)?;
        }
        let block = first.block();
        let inner = big.strides()[axis];
        let bit = 1u32 << axis;
        Ok(Self::from_fn(big, first.degree, first.rank, |mask, p, out| {
            if mask & bit != 0 {
                return;
            }
            let k = (p / inner) % n_axis;
            let q = (p / (inner * n_axis)) * inner + p % inner;
            let s = &slices[k];
            let src = &s.coeffs[sub.position(drop_bit(mask, axis))];
            out.copy_from_slice(&src[q * block..(q + 1) * block]);
        }))
    }

    /// Integral of a top-degree form; orientation is the axis order.
    pub fn integrate(&self) -> Result<Vec<C<T>>> {
        if self.degree != self.grid.dim() {
            return Err(Error::Degree(format!(
                "integration needs degree {}, got {}",
                self.grid.dim(),
                self.degree
            )));
        }
        Ok(self.grid.quadrature(&self.coeffs[0], self.block()))
    }

    /// Pointwise matrix trace (a scalar form).
    pub fn trace(&self) -> Self {
        let n = self.rank;
        let b = self.block();
        Self {
            grid: self.grid.clone(),
            degree: self.degree,
            rank: 1,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.chunks(b).map(|m| linalg::trace(m, n)).collect())
                .collect(),
        }
    }

    /// Pointwise `g a h` with `g`, `h` degree-0 forms of the same rank.
    pub fn sandwich(&self, g: &Self, h: &Self) -> Result<Self> {
        if g.degree != 0 || h.degree != 0 {
            return Err(Error::Degree("sandwich factors must be functions".into()));
        }
        g.wedge(self)?.wedge(h)
    }

    /// Block-diagonal combination `diag(a, b)` of two forms of equal degree.
    pub fn block_sum(&self, other: &Self) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        if self.degree != other.degree {
            return Err(Error::Degree("block sum of different degrees".into()));
        }
        let (na, nb) = (self.rank, other.rank);
        let (ba, bb) = (na * na, nb * nb);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                a.chunks(ba)
                    .zip(b.chunks(bb))
                    .flat_map(|(x, y)| linalg::block_diag(x, na, y, nb))
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            degree: self.degree,
            rank: na + nb,
            coeffs,
        })
    }

    /// Integrals over the coordinate subtori through the base point, one per
    /// increasing `p`-subset of axes. Requires a torus grid.
    pub fn periods(&self) -> Result<Vec<(Vec<usize>, C<T>)>> {
        if !self.grid.is_torus() {
            return Err(Error::UnsupportedDomain(
                "periods are only defined on all-circle grids".into(),
            ));
        }
        if self.rank != 1 {
            return Err(Error::InvalidArgument("periods need a scalar form".into()));
        }
        let grid = &self.grid;
        Ok(self
            .masks()
            .iter()
            .zip(&self.coeffs)
            .map(|(&mask, c)| {
                let axes = mask_axes(mask);
                let mut total = Complex::zero();
                let mut idx = vec![0usize; grid.dim()];
                loop {
                    let p = grid.ravel(&idx);
                    let w = axes
                        .iter()
                        .fold(T::one(), |w, &a| w * grid.axes()[a].weights[idx[a]]);
                    total += c[p] * w;
                    // advance the odometer over the axes of the cycle
                    let mut carry = true;
                    for &a in axes.iter().rev() {
                        idx[a] += 1;
                        if idx[a] < grid.shape()[a] {
                            carry = false;
                            break;
                        }
                        idx[a] = 0;
                    }
                    if carry {
                        break;
                    }
                }
                (axes, total)
            })
            .collect())
    }

    /// Decide exactness by closedness plus vanishing periods (tori only).
    pub fn is_exact(&self, tol: T) -> Result<ExactnessReport<T>> {
        let periods = self.periods()?;
        let scale = T::one().max(self.max_abs());
        let closedness = if self.degree < self.grid.dim() {
            self.d().max_abs()
        } else {
            T::zero()
        };
        let (cycle, worst) = periods
            .iter()
            .map(|(axes, v)| (axes.clone(), v.norm()))
            .fold((Vec::new(), T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        let verdict = if closedness > tol * scale {
            Verdict::NotClosed
        } else if worst > tol * scale {
            Verdict::NotExact
        } else {
            Verdict::Exact
        };
        Ok(ExactnessReport {
            degree: self.degree,
            verdict,
            closedness,
            worst_period: worst,
            cycle,
            scale,
        })
    }
}

/// Outcome of an exactness test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Exact,
    NotExact,
    NotClosed,
}

/// Exactness evidence for one homogeneous degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactnessReport<T> {
    pub degree: usize,
    pub verdict: Verdict,
    /// `sup |d a|`.
    pub closedness: T,
    /// Largest period modulus.
    pub worst_period: T,
    /// Axes of the cycle attaining the worst period.
    pub cycle: Vec<usize>,
    /// `max(1, sup |a|)`, the scale tolerances are multiplied by.
    pub scale: T,
}

/// Normalized symmetrized trace
/// `(1 / ((k!)^2 (2 pi i)^k)) sum_sigma eps(sigma) tr(w_s1 ^ ... ^ w_sk)`
/// with Koszul signs `eps` for the form degrees.
///
/// Arguments that are the same reference are treated as identical, so the
/// sum runs over distinct orderings only; identical odd arguments cancel.
pub fn sym_trace<T: Real>(forms: &[&MatrixForm<T>]) -> Result<MatrixForm<T>> {
    let k = forms.len();
    if k == 0 {
        return Err(Error::InvalidArgument("sym_trace needs at least one argument".into()));
    }
    let first = forms[0];
    for f in forms {
        first.check_compatible(f)?;
    }
    let grid = first.grid.clone();
    let degree: usize = forms.iter().map(|f| f.degree).sum();

    // identity classes of the arguments, with multiplicities
    let mut class_of = vec![0usize; k];
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..k {
        match reps.iter().position(|&r| std::ptr::eq(forms[r], forms[i])) {
            Some(c) => class_of[i] = c,
            None => {
                class_of[i] = reps.len();
                reps.push(i);
            }
        }
    }
    let mut remaining: Vec<Vec<usize>> = vec![Vec::new(); reps.len()];
    for i in 0..k {
        remaining[class_of[i]].push(i);
    }
    let mut multiplicity = T::one();
    for members in &remaining {
        if members.len() > 1 && forms[members[0]].degree % 2 == 1 {
            return Ok(MatrixForm::zeros(&grid, degree, 1));
        }
        multiplicity *= factorial::<T>(members.len());
    }

    let mut acc = MatrixForm::zeros(&grid, degree, 1);
    if degree <= grid.dim() {
        let mut placed: Vec<usize> = Vec::new();
        let mut cursor = vec![0usize; reps.len()];
        dfs(forms, &remaining, &mut cursor, &mut placed, None, 1, &mut acc)?;
    }
    let norm = inv_two_pi_i::<T>().powu(k as u32) * (multiplicity / (factorial::<T>(k) * factorial::<T>(k)));
    Ok(acc.scale(norm))
}

fn dfs<T: Real>(
    forms: &[&MatrixForm<T>],
    classes: &[Vec<usize>],
    cursor: &mut [usize],
    placed: &mut Vec<usize>,
    prefix: Option<&MatrixForm<T>>,
    sign: i32,
    acc: &mut MatrixForm<T>,
) -> Result<()> {
    let k = forms.len();
    for c in 0..classes.len() {
        if cursor[c] == classes[c].len() {
            continue;
        }
        let orig = classes[c][cursor[c]];
        // Koszul sign from moving `orig` past later-indexed placed arguments
        let flips = placed
            .iter()
            .filter(|&&q| q > orig && forms[q].degree % 2 == 1)
            .count();
        let s = if forms[orig].degree % 2 == 1 && flips % 2 == 1 { -sign } else { sign };
        if placed.len() + 1 == k {
            let term = match prefix {
                Some(p) => p.trace_wedge(forms[orig])?,
                None => forms[orig].trace(),
            };
            acc.axpy(Complex::new(T::lit(s as f64), T::zero()), &term)?;
            continue;
        }
        let next = match prefix {
            Some(p) => p.wedge(forms[orig])?,
            None => forms[orig].clone(),
        };
        cursor[c] += 1;
        placed.push(orig);
        dfs(forms, classes, cursor, placed, Some(&next), s, acc)?;
        placed.pop();
        cursor[c] -= 1;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn admits(self, degree: usize) -> bool {
        (degree % 2 == 0) == (self == Parity::Even)
    }
}

/// Inhomogeneous scalar form stored degree by degree.
#[derive(Clone, Debug)]
pub struct GradedForm<T: Real> {
    pub parity: Parity,
    terms: BTreeMap<usize, MatrixForm<T>>,
}

impl<T: Real> GradedForm<T> {
    pub fn new(parity: Parity) -> Self {
        Self {
            parity,
            terms: BTreeMap::new(),
        }
    }

    /// Insert a homogeneous term, adding to any existing term of that degree.
    pub fn insert(&mut self, form: MatrixForm<T>) -> Result<()> {
        if !self.parity.admits(form.degree) {
            return Err(Error::Degree(format!(
                "degree {} does not match {:?} parity",
                form.degree, self.parity
            )));
        }
        if form.degree > form.grid.dim() {
            return Ok(());
        }
        match self.terms.get_mut(&form.degree) {
            Some(existing) => existing.axpy(Complex::one(), &form)?,
            None => {
                self.terms.insert(form.degree, form);
            }
        }
        Ok(())
    }

    pub fn get(&self, degree: usize) -> Option<&MatrixForm<T>> {
        self.terms.get(&degree)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.terms.keys().copied().collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&usize, &MatrixForm<T>)> {
        self.terms.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn combine(&self, other: &Self, s: T) -> Result<Self> {
        if self.parity != other.parity {
            return Err(Error::Degree("parity mismatch".into()));
        }
        let mut out = self.clone();
        for f in other.terms.values() {
            out.insert(f.scale_real(s))?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -T::one())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            parity: self.parity,
            terms: self.terms.iter().map(|(&k, f)| (k, f.scale(s))).collect(),
        }
    }

    /// Exterior derivative degree by degree (the parity flips).
    pub fn d(&self) -> Self {
        let mut out = Self::new(self.parity.flip());
        for f in self.terms.values() {
            out.insert(f.d()).expect("parity flips consistently");
        }
        out
    }

    /// Fiber integration degree by degree (the parity flips).
    pub fn fiber_integrate(&self) -> Result<Self> {
        let mut out = Self::new(self.parity.flip());
        for f in self.terms.values() {
            if f.degree >= 1 {
                out.insert(f.fiber_integrate()?)?;
            }
        }
        Ok(out)
    }

    /// Sup-norm per degree.
    pub fn norms(&self) -> BTreeMap<usize, T> {
        self.terms.iter().map(|(&k, f)| (k, f.max_abs())).collect()
    }

    /// Sup-norm of the difference per degree; a degree missing on one side
    /// counts as zero.
    pub fn defects(&self, other: &Self) -> Result<BTreeMap<usize, T>> {
        Ok(self.sub(other)?.norms())
    }

    /// Largest per-degree defect.
    pub fn max_defect(&self, other: &Self) -> Result<T> {
        Ok(self.defects(other)?.values().copied().fold(T::zero(), T::max))
    }

    pub fn max_abs(&self) -> T {
        self.norms().values().copied().fold(T::zero(), T::max)
    }

    /// Exactness per homogeneous degree.
    pub fn is_exact(&self, tol: T) -> Result<Vec<ExactnessReport<T>>> {
        self.terms.values().map(|f| f.is_exact(tol)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Factor, GridSpec};
    use crate::scalar::{im, re};
    use std::f64::consts::PI;

    fn torus(n: &[usize]) -> Arc<Grid<f64>> {
        Grid::new(GridSpec::torus(n)).unwrap()
    }

    #[test]
    fn shuffle_signs() {
        assert_eq!(shuffle_sign(0b01, 0b10), 1);
        assert_eq!(shuffle_sign(0b10, 0b01), -1);
        assert_eq!(shuffle_sign(0b101, 0b010), -1);
        assert_eq!(shuffle_sign(0b100, 0b011), 1);
    }

    #[test]
    fn coordinate_forms_anticommute() {
        let g = torus(&[8, 8]);
        let dx = MatrixForm::coordinate_one_form(&g, 0).unwrap();
        let dy = MatrixForm::coordinate_one_form(&g, 1).unwrap();
        let xy = dx.wedge(&dy).unwrap();
        let yx = dy.wedge(&dx).unwrap();
        assert_eq!(xy.add(&yx).unwrap().max_abs(), 0.0);
        assert_eq!(dx.wedge(&dx).unwrap().max_abs(), 0.0);
        assert_eq!(xy.component(0b11)[0], re(1.0));
    }

    #[test]
    fn repeated_index_vanishes_for_matrices() {
        let g = torus(&[8]);
        let a = MatrixForm::from_fn(&g, 1, 2, |_, p, out| {
            out.copy_from_slice(&[re(1.0), re(p as f64), im(2.0), re(-1.0)]);
        });
        let b = MatrixForm::from_fn(&g, 1, 2, |_, _, out| {
            out.copy_from_slice(&[re(0.5), im(1.0), re(3.0), re(1.0)]);
        });
        assert_eq!(a.wedge(&b).unwrap().degree(), 2);
        assert_eq!(a.wedge(&b).unwrap().components().len(), 0);
    }

    #[test]
    fn d_of_sine() {
        let g = torus(&[64]);
        let f = MatrixForm::scalar_fn(&g, |x| re(x[0].sin()));
        let df = f.d();
        for p in 0..g.len() {
            let x = g.coords(p)[0];
            assert!((df.at(0b1, p)[0] - re(x.cos())).norm() < 1e-12);
        }
    }

    #[test]
    fn contraction_examples() {
        let g = torus(&[8, 8]);
        let f = MatrixForm::scalar_fn(&g, |x| re(x[0].cos()));
        let dy = MatrixForm::coordinate_one_form(&g, 1).unwrap();
        let fdy = f.wedge(&dy).unwrap();
        assert_eq!(fdy.contract(1).unwrap().max_abs_diff(&f).unwrap(), 0.0);
        assert_eq!(dy.contract(0).unwrap().max_abs(), 0.0);
        let dx = MatrixForm::coordinate_one_form(&g, 0).unwrap();
        let w = dx.wedge(&fdy).unwrap();
        assert_eq!(w.contract(1).unwrap().contract(1).unwrap().max_abs(), 0.0);
        // i_{dy}(dx ^ dy) = -dx
        assert_eq!(w.contract(1).unwrap().add(&dx.wedge(&f).unwrap()).unwrap().max_abs(), 0.0);
        assert!(f.contract(0).is_err());
    }

    #[test]
    fn slice_examples() {
        let g = Grid::<f64>::new(GridSpec::new(
            vec![Factor::Circle { n: 8 }, Factor::Interval { n: 9, a: 0.0, b: 1.0 }],
            None,
        ))
        .unwrap();
        let f = MatrixForm::scalar_fn(&g, |x| re(x[0].sin() + x[1]));
        let dx = MatrixForm::coordinate_one_form(&g, 0).unwrap();
        let dt = MatrixForm::coordinate_one_form(&g, 1).unwrap();
        let s = f.wedge(&dx).unwrap().slice(1, 0).unwrap();
        for q in 0..8 {
            let x = s.grid().coords(q)[0];
            assert!((s.at(0b1, q)[0] - re(x.sin())).norm() < 1e-15);
        }
        assert_eq!(dt.slice(1, 4).unwrap().max_abs(), 0.0);
        assert!(dt.slice(1, 9).is_err());
    }

    #[test]
    fn fiber_integration_examples() {
        let g = Grid::<f64>::new(GridSpec::torus_with_loop(&[16], 16)).unwrap();
        let f = MatrixForm::scalar_fn(&g, |x| re(x[0].cos() / (2.0 * PI)));
        let dx = MatrixForm::coordinate_one_form(&g, 0).unwrap();
        let dth = MatrixForm::coordinate_one_form(&g, 1).unwrap();
        let a = f.wedge(&dx).unwrap().wedge(&dth).unwrap();
        let out = a.fiber_integrate().unwrap();
        assert_eq!(out.degree(), 1);
        for q in 0..16 {
            let x = out.grid().coords(q)[0];
            assert!((out.at(0b1, q)[0] - re(x.cos())).norm() < 1e-14);
        }
        assert_eq!(dx.fiber_integrate().unwrap().max_abs(), 0.0);
        assert!(torus_form().fiber_integrate().is_err());
    }

    fn torus_form() -> MatrixForm<f64> {
        MatrixForm::coordinate_one_form(&torus(&[8]), 0).unwrap()
    }

    #[test]
    fn top_form_integrals() {
        let g = torus(&[64]);
        let c = MatrixForm::scalar_fn(&g, |_| re(1.0 / (2.0 * PI))).wedge(&torus_dx(&g)).unwrap();
        assert!((c.integrate().unwrap()[0] - re(1.0)).norm() < 1e-14);
        let e = MatrixForm::scalar_fn(&g, |x| C::new(0.0, x[0]).exp()).wedge(&torus_dx(&g)).unwrap();
        assert!(e.integrate().unwrap()[0].norm() < 1e-14);
        assert!(MatrixForm::scalar_fn(&g, |_| re(1.0)).integrate().is_err());

        let sq = Grid::<f64>::new(GridSpec::new(
            vec![
                Factor::Interval { n: 33, a: 0.0, b: 1.0 },
                Factor::Interval { n: 33, a: 0.0, b: 1.0 },
            ],
            None,
        ))
        .unwrap();
        let dxdy = MatrixForm::coordinate_one_form(&sq, 0)
            .unwrap()
            .wedge(&MatrixForm::coordinate_one_form(&sq, 1).unwrap())
            .unwrap();
        assert!((dxdy.integrate().unwrap()[0] - re(1.0)).norm() < 1e-12);
    }

    fn torus_dx(g: &Arc<Grid<f64>>) -> MatrixForm<f64> {
        MatrixForm::coordinate_one_form(g, 0).unwrap()
    }

    #[test]
    fn sym_trace_single_argument() {
        let g = torus(&[8]);
        let x = MatrixForm::from_fn(&g, 1, 2, |_, _, out| {
            out.copy_from_slice(&[im(1.0), re(2.0), re(0.0), im(3.0)]);
        });
        let t = sym_trace(&[&x]).unwrap();
        let want = inv_two_pi_i::<f64>() * im(4.0);
        assert!((t.at(0b1, 0)[0] - want).norm() < 1e-15);
    }

    #[test]
    fn sym_trace_of_two_copies_of_even_form() {
        let g = torus(&[8, 8, 8, 8]);
        let f = MatrixForm::from_fn(&g, 2, 2, |mask, p, out| {
            let v = (mask as f64) * 0.1 + (p % 7) as f64 * 0.01;
            out.copy_from_slice(&[re(v), im(v), re(-v * v), im(0.3)]);
        });
        let lhs = sym_trace(&[&f, &f]).unwrap();
        let ff = f.wedge(&f).unwrap().trace();
        let rhs = ff.scale(inv_two_pi_i::<f64>().powu(2) * 0.5);
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-14);
    }

    #[test]
    fn sym_trace_of_odd_pair_is_graded() {
        // two distinct 1-forms: tr(X^Y) - (-1) tr(Y^X) = 2 tr(X^Y)
        let g = torus(&[8, 8]);
        let x = MatrixForm::from_fn(&g, 1, 2, |mask, p, out| {
            out.copy_from_slice(&[re(mask as f64), im(p as f64 * 0.1), re(1.0), re(0.0)]);
        });
        let y = MatrixForm::from_fn(&g, 1, 2, |mask, _, out| {
            out.copy_from_slice(&[re(0.0), re(2.0), im(mask as f64), re(-1.0)]);
        });
        let t = sym_trace(&[&x, &y]).unwrap();
        let want = x.wedge(&y).unwrap().trace().scale(inv_two_pi_i::<f64>().powu(2) * 0.5);
        assert!(t.max_abs_diff(&want).unwrap() < 1e-14);
        assert_eq!(sym_trace(&[&x, &x]).unwrap().max_abs(), 0.0);
        assert!(sym_trace::<f64>(&[]).is_err());
    }

    #[test]
    fn d_squared_vanishes() {
        let g = torus(&[12, 10, 8]);
        let a = MatrixForm::from_fn(&g, 1, 1, |mask, p, out| {
            let x = g.coords(p);
            out[0] = C::new((x[0] + mask as f64).sin() * x[1].cos(), (2.0 * x[2]).cos());
        });
        assert!(a.d().d().max_abs() < 1e-10);
    }

    #[test]
    fn pullback_then_stack_roundtrip() {
        let g = Grid::<f64>::new(GridSpec::torus_with_loop(&[8], 8)).unwrap();
        let f = MatrixForm::scalar_fn(&g, |x| re(x[0].sin() * x[1].cos()));
        let big = g.insert_factor(1, Factor::Interval { n: 8, a: 0.0, b: 1.0 }).unwrap();
        let lifted = f.d().pullback_product(&big, 1).unwrap();
        for k in [0, 3, 7] {
            assert_eq!(lifted.slice(1, k).unwrap().max_abs_diff(&f.d()).unwrap(), 0.0);
        }
        let slices: Vec<_> = (0..8).map(|k| f.d().scale_real(k as f64)).collect();
        let st = MatrixForm::stack(&big, 1, &slices).unwrap();
        assert_eq!(st.slice(1, 5).unwrap().max_abs_diff(&slices[5]).unwrap(), 0.0);
    }

    #[test]
    fn periods_and_exactness() {
        let g = torus(&[16, 16]);
        let dx = MatrixForm::coordinate_one_form(&g, 0).unwrap();
        let per = dx.periods().unwrap();
        assert_eq!(per[0].0, vec![0]);
        assert!((per[0].1 - re(2.0 * PI)).norm() < 1e-13);
        assert!(per[1].1.norm() < 1e-15);
        let r = dx.is_exact(1e-9).unwrap();
        assert_eq!(r.verdict, Verdict::NotExact);
        assert!((r.worst_period - 2.0 * PI).abs() < 1e-12);

        let h = MatrixForm::scalar_fn(&g, |x| re(x[0].sin() * x[1].cos()));
        let dh = h.d();
        assert!(dh.periods().unwrap().iter().all(|(_, v)| v.norm() < 1e-12));
        assert_eq!(dh.is_exact(1e-9).unwrap().verdict, Verdict::Exact);

        let phase = MatrixForm::scalar_fn(&g, |x| im(3.0 * x[0]).exp());
        let inv = MatrixForm::scalar_fn(&g, |x| im(-3.0 * x[0]).exp());
        let mc = inv.wedge(&phase.d()).unwrap().scale(inv_two_pi_i::<f64>());
        let per = mc.periods().unwrap();
        assert!((per[0].1 - re(3.0)).norm() < 1e-12);

        let s = Grid::<f64>::new(GridSpec::new(vec![Factor::Interval { n: 9, a: 0.0, b: 1.0 }], None)).unwrap();
        let ds = MatrixForm::coordinate_one_form(&s, 0).unwrap();
        assert!(matches!(ds.is_exact(1e-9), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn not_closed_verdict() {
        let g = torus(&[16, 16]);
        let a = MatrixForm::scalar_fn(&g, |x| re(x[1].sin())).wedge(&torus_dx(&g)).unwrap();
        assert_eq!(a.is_exact(1e-9).unwrap().verdict, Verdict::NotClosed);
    }

    #[test]
    fn graded_form_arithmetic() {
        let g = torus(&[8, 8]);
        let mut a = GradedForm::new(Parity::Odd);
        assert!(a.insert(MatrixForm::zeros(&g, 0, 1)).is_err());
        a.insert(torus_dx(&g)).unwrap();
        a.insert(torus_dx(&g)).unwrap();
        assert!((a.get(1).unwrap().at(0b01, 0)[0] - re(2.0)).norm() < 1e-15);
        let b = a.sub(&a).unwrap();
        assert_eq!(b.max_abs(), 0.0);
        assert_eq!(a.d().parity, Parity::Even);
    }
}
