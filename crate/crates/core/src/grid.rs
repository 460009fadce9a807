//! Discretized product manifolds.
//!
//! A [`Grid`] is a product of one-dimensional factors (circles, uniform
//! intervals, Lobatto intervals) and optionally one Euler-angle chart of
//! the 3-sphere. Points are stored row-major: the last axis varies fastest.
//!
//! Orientation is the coordinate order of the axes. For the 3-sphere chart
//! the axes are `(psi, theta, phi)` with `psi` in `[0, 4 pi)`, `theta` in
//! `[0, pi]` and `phi` in `[0, 2 pi)`; in this orientation the map
//! `(psi, theta, phi) -> e^{i phi s3/2} e^{i theta s2/2} e^{-i phi s3/2} e^{i psi s3/2}`
//! has degree one onto SU(2), so its odd Chern character integrates to `-1`.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalar::{Real, C};

/// Minimum number of samples along any axis.
pub const MIN_SAMPLES: usize = 8;

/// One factor of a product grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Factor {
    /// `n` uniform samples `2 pi k / n` of the circle.
    Circle { n: usize },
    /// `n` uniform samples of `[a, b]`, both endpoints included.
    Interval { n: usize, a: f64, b: f64 },
    /// `n` Gauss-Lobatto-Legendre nodes of `[a, b]`, both endpoints included.
    Lobatto { n: usize, a: f64, b: f64 },
    /// Euler-angle chart of the 3-sphere, three axes `(psi, theta, phi)`.
    #[serde(rename = "sphere3")]
    EulerSphere3 {
        n_psi: usize,
        n_theta: usize,
        n_phi: usize,
    },
}

impl Factor {
    pub fn axis_count(&self) -> usize {
        match self {
            Factor::EulerSphere3 { .. } => 3,
            _ => 1,
        }
    }

    fn sample_counts(&self) -> Vec<usize> {
        match *self {
            Factor::Circle { n } | Factor::Interval { n, .. } | Factor::Lobatto { n, .. } => vec![n],
            Factor::EulerSphere3 {
                n_psi,
                n_theta,
                n_phi,
            } => vec![n_psi, n_theta, n_phi],
        }
    }
}

/// Serializable grid descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub factors: Vec<Factor>,
    /// Factor index of the loop-direction circle; must be the last factor.
    #[serde(default)]
    pub distinguished_circle: Option<usize>,
}

impl GridSpec {
    pub fn new(factors: Vec<Factor>, distinguished_circle: Option<usize>) -> Self {
        Self {
            factors,
            distinguished_circle,
        }
    }

    /// A torus `T^d` with the given sample counts.
    pub fn torus(samples: &[usize]) -> Self {
        Self::new(samples.iter().map(|&n| Factor::Circle { n }).collect(), None)
    }

    /// `T^d x S^1` with the last circle distinguished.
    pub fn torus_with_loop(base: &[usize], loop_samples: usize) -> Self {
        let mut factors: Vec<Factor> = base.iter().map(|&n| Factor::Circle { n }).collect();
        factors.push(Factor::Circle { n: loop_samples });
        let last = factors.len() - 1;
        Self::new(factors, Some(last))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    Periodic,
    Uniform,
    Lobatto,
}

/// One coordinate direction of a grid.
#[derive(Clone, Debug)]
pub struct Axis<T> {
    pub kind: AxisKind,
    /// Index of the factor this axis belongs to.
    pub factor: usize,
    pub n: usize,
    /// Start of the coordinate range.
    pub lo: T,
    /// End of the range (the period end for periodic axes).
    pub hi: T,
    pub coords: Vec<T>,
    /// Coordinate quadrature weights along the axis.
    pub weights: Vec<T>,
    dense: Vec<T>,
    h: T,
}

impl<T: Real> Axis<T> {
    fn periodic(factor: usize, n: usize, period: T) -> Self {
        let h = period / T::of(n);
        Self {
            kind: AxisKind::Periodic,
            factor,
            n,
            lo: T::zero(),
            hi: period,
            coords: (0..n).map(|k| h * T::of(k)).collect(),
            weights: vec![h; n],
            dense: quadrature::periodic_diff_matrix(n, period),
            h,
        }
    }

    fn uniform(factor: usize, n: usize, a: T, b: T) -> Self {
        let h = (b - a) / T::of(n - 1);
        let mut coords: Vec<T> = (0..n).map(|k| a + h * T::of(k)).collect();
        coords[n - 1] = b;
        Self {
            kind: AxisKind::Uniform,
            factor,
            n,
            lo: a,
            hi: b,
            coords,
            weights: quadrature::gregory_weights(n, h),
            dense: Vec::new(),
            h,
        }
    }

    fn lobatto(factor: usize, n: usize, a: T, b: T) -> Self {
        let (coords, weights) = quadrature::gauss_lobatto(n, a, b);
        let dense = quadrature::collocation_diff_matrix(&coords);
        Self {
            kind: AxisKind::Lobatto,
            factor,
            n,
            lo: a,
            hi: b,
            coords,
            weights,
            dense,
            h: (b - a) / T::of(n - 1),
        }
    }

    /// Length of the axis (period for circles).
    pub fn length(&self) -> T {
        self.hi - self.lo
    }

    /// Nonzero entries `(sample, weight)` of the derivative at sample `j`.
    pub fn derivative_row(&self, j: usize) -> Vec<(usize, T)> {
        match self.kind {
            AxisKind::Uniform => {
                let (start, w) = quadrature::fd4_stencil(j, self.n, self.h);
                w.iter().enumerate().map(|(m, &v)| (start + m, v)).collect()
            }
            _ => self.dense[j * self.n..(j + 1) * self.n]
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, v)| *v != T::zero())
                .collect(),
        }
    }

    /// Largest band-limited wavenumber that is still differentiated exactly
    /// (periodic axes only).
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }
}

/// An immutable discretized product manifold.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    spec: GridSpec,
    axes: Vec<Axis<T>>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
    distinguished: Option<usize>,
    /// Increasing multi-indices (bitmasks) per degree, lexicographic.
    basis: Vec<Vec<u32>>,
    /// Position of a mask inside its degree's basis.
    position: Vec<usize>,
    volume_weight_theta: Option<(usize, Vec<T>)>,
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl<T: Real> Grid<T> {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        if spec.factors.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one factor".into()));
        }
        for f in &spec.factors {
            if let Some(&n) = f.sample_counts().iter().find(|&&n| n < MIN_SAMPLES) {
                return Err(Error::InvalidGrid(format!(
                    "factor {f:?} has {n} samples, need at least {MIN_SAMPLES}"
                )));
            }
            match *f {
                Factor::Interval { a, b, .. } | Factor::Lobatto { a, b, .. } => {
                    if !(b > a) || !a.is_finite() || !b.is_finite() {
                        return Err(Error::InvalidGrid(format!("bad interval [{a}, {b}]")));
                    }
                }
                _ => {}
            }
        }
        if let Some(d) = spec.distinguished_circle {
            if d + 1 != spec.factors.len() {
                return Err(Error::InvalidGrid(
                    "distinguished circle must be the last factor".into(),
                ));
            }
            if !matches!(spec.factors[d], Factor::Circle { .. }) {
                return Err(Error::InvalidGrid(
                    "distinguished factor must be a circle".into(),
                ));
            }
        }

        let two_pi = T::lit(2.0) * T::PI();
        let mut axes = Vec::new();
        let mut volume_weight_theta = None;
        for (fi, f) in spec.factors.iter().enumerate() {
            match *f {
                Factor::Circle { n } => axes.push(Axis::periodic(fi, n, two_pi)),
                Factor::Interval { n, a, b } => axes.push(Axis::uniform(fi, n, T::lit(a), T::lit(b))),
                Factor::Lobatto { n, a, b } => axes.push(Axis::lobatto(fi, n, T::lit(a), T::lit(b))),
                Factor::EulerSphere3 {
                    n_psi,
                    n_theta,
                    n_phi,
                } => {
                    axes.push(Axis::periodic(fi, n_psi, two_pi * T::lit(2.0)));
                    let theta = Axis::uniform(fi, n_theta, T::zero(), T::PI());
                    // sin(theta)-weighted measure, normalized so the theta part sums to 2
                    let raw: Vec<T> = theta
                        .coords
                        .iter()
                        .zip(&theta.weights)
                        .map(|(t, w)| t.sin() * *w)
                        .collect();
                    let total: T = raw.iter().copied().sum();
                    let scaled: Vec<T> = raw.iter().map(|w| *w * T::lit(2.0) / total).collect();
                    volume_weight_theta = Some((axes.len(), scaled));
                    axes.push(theta);
                    axes.push(Axis::periodic(fi, n_phi, two_pi));
                }
            }
        }
        let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
        let dim = shape.len();
        if dim > 16 {
            return Err(Error::InvalidGrid("at most 16 axes are supported".into()));
        }
        let mut strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let len = shape.iter().product();
        let distinguished = spec.distinguished_circle.map(|_| dim - 1);

        let mut basis = vec![Vec::new(); dim + 1];
        let mut position = vec![0usize; 1 << dim];
        for p in 0..=dim {
            for combo in itertools::Itertools::combinations(0..dim, p) {
                let mask = combo.iter().fold(0u32, |m, &a| m | (1 << a));
                position[mask as usize] = basis[p].len();
                basis[p].push(mask);
            }
        }

        Ok(Arc::new(Self {
            spec,
            axes,
            shape,
            strides,
            len,
            distinguished,
            basis,
            position,
            volume_weight_theta,
        }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn axis(&self, axis: usize) -> Result<&Axis<T>> {
        self.axes.get(axis).ok_or(Error::AxisOutOfRange {
            axis,
            dim: self.dim(),
        })
    }

    /// Axis index of the distinguished (loop) circle, always the last axis.
    pub fn distinguished_axis(&self) -> Option<usize> {
        self.distinguished
    }

    /// True when every factor is a circle.
    pub fn is_torus(&self) -> bool {
        self.spec
            .factors
            .iter()
            .all(|f| matches!(f, Factor::Circle { .. }))
    }

    /// Increasing multi-indices of length `p`, as bitmasks.
    pub fn basis(&self, p: usize) -> &[u32] {
        self.basis.get(p).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Position of a multi-index bitmask within its degree's basis.
    pub fn position(&self, mask: u32) -> usize {
        self.position[mask as usize]
    }

    /// Sample index of point `p` along `axis`.
    #[inline]
    pub fn index_along(&self, p: usize, axis: usize) -> usize {
        (p / self.strides[axis]) % self.shape[axis]
    }

    pub fn unravel(&self, p: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.index_along(p, a)).collect()
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates of point `p`.
    pub fn coords(&self, p: usize) -> Vec<T> {
        (0..self.dim())
            .map(|a| self.axes[a].coords[self.index_along(p, a)])
            .collect()
    }

    /// Product of the per-axis coordinate quadrature weights at point `p`.
    pub fn weight(&self, p: usize) -> T {
        (0..self.dim()).fold(T::one(), |w, a| w * self.axes[a].weights[self.index_along(p, a)])
    }

    /// Total volume under the grid's volume measure: the product of axis
    /// lengths, with the 3-sphere chart contributing `2 pi^2`.
    pub fn volume(&self) -> T {
        let mut total = T::zero();
        for p in 0..self.len {
            total += self.volume_weight(p);
        }
        total
    }

    /// Volume-measure weight at point `p` (equals [`Grid::weight`] except on
    /// the 3-sphere chart, where it is the normalized round measure).
    pub fn volume_weight(&self, p: usize) -> T {
        match &self.volume_weight_theta {
            None => self.weight(p),
            Some((theta_axis, wt)) => {
                let mut w = T::one();
                for a in 0..self.dim() {
                    let i = self.index_along(p, a);
                    if a == *theta_axis {
                        w *= wt[i] / T::lit(8.0);
                    } else {
                        w *= self.axes[a].weights[i];
                    }
                }
                w
            }
        }
    }

    /// Differentiate a per-point field of `block` coefficients along `axis`.
    pub fn differentiate(&self, field: &[C<T>], block: usize, axis: usize) -> Result<Vec<C<T>>> {
        let ax = self.axis(axis)?;
        if field.len() != self.len * block {
            return Err(Error::ShapeMismatch(format!(
                "field has {} entries, grid expects {}",
                field.len(),
                self.len * block
            )));
        }
        let stride = self.strides[axis];
        let n = ax.n;
        let rows: Vec<Vec<(usize, T)>> = (0..n).map(|j| ax.derivative_row(j)).collect();
        let mut out = vec![Complex::zero(); field.len()];
        out.par_chunks_mut(block)
            .with_min_len(256)
            .enumerate()
            .for_each(|(p, dst)| {
                let j = (p / stride) % n;
                let base = p - j * stride;
                for &(k, w) in &rows[j] {
                    let src = &field[(base + k * stride) * block..(base + k * stride + 1) * block];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += *s * w;
                    }
                }
            });
        Ok(out)
    }

    /// Quadrature sum `sum_p w_p f(p)` of a per-point field, returned per
    /// block entry. Summation order is fixed (point order).
    pub fn quadrature(&self, field: &[C<T>], block: usize) -> Vec<C<T>> {
        let mut acc = vec![Complex::zero(); block];
        for p in 0..self.len {
            let w = self.weight(p);
            for (a, v) in acc.iter_mut().zip(&field[p * block..(p + 1) * block]) {
                *a += *v * w;
            }
        }
        acc
    }

    /// Grid with the given axis removed (the axis must be a whole factor).
    pub fn remove_axis(&self, axis: usize) -> Result<Arc<Self>> {
        let ax = self.axis(axis)?;
        let fi = ax.factor;
        if self.spec.factors[fi].axis_count() != 1 {
            return Err(Error::UnsupportedDomain(
                "cannot remove a single axis of the 3-sphere chart".into(),
            ));
        }
        if self.spec.factors.len() == 1 {
            return Err(Error::InvalidGrid("cannot remove the only factor".into()));
        }
        let mut factors = self.spec.factors.clone();
        factors.remove(fi);
        let distinguished = match self.spec.distinguished_circle {
            Some(d) if d == fi => None,
            Some(d) if d > fi => Some(d - 1),
            other => other,
        };
        Grid::new(GridSpec::new(factors, distinguished))
    }

    /// Grid with `factor` inserted at factor position `at`.
    pub fn insert_factor(&self, at: usize, factor: Factor) -> Result<Arc<Self>> {
        let mut factors = self.spec.factors.clone();
        if at > factors.len() {
            return Err(Error::InvalidArgument(format!("factor position {at} out of range")));
        }
        factors.insert(at, factor);
        let distinguished = match self.spec.distinguished_circle {
            Some(d) if d >= at => Some(d + 1),
            other => other,
        };
        Grid::new(GridSpec::new(factors, distinguished))
    }

    /// First axis index belonging to factor `fi`.
    pub fn factor_axis(&self, fi: usize) -> Option<usize> {
        self.axes.iter().position(|a| a.factor == fi)
    }
}

/// Same grid (by pointer or by descriptor).
pub fn same_grid<T: Real>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> bool {
    Arc::ptr_eq(a, b) || a.spec == b.spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;
    use std::f64::consts::PI;

    #[test]
    fn circle_weights_sum_to_period() {
        let g = Grid::<f64>::new(GridSpec::torus(&[64])).unwrap();
        assert_eq!(g.len(), 64);
        assert!(g.axes()[0].weights.iter().all(|&w| w == 2.0 * PI / 64.0));
        assert!((g.volume() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn torus_with_loop_cardinality() {
        let g = Grid::<f64>::new(GridSpec::torus_with_loop(&[32, 32], 64)).unwrap();
        assert_eq!(g.len(), 65536);
        assert_eq!(g.distinguished_axis(), Some(2));
    }

    #[test]
    fn sphere_volume_matches_direct_summation() {
        let spec = GridSpec::new(
            vec![Factor::EulerSphere3 {
                n_psi: 16,
                n_theta: 16,
                n_phi: 32,
            }],
            None,
        );
        let g = Grid::<f64>::new(spec).unwrap();
        assert!((g.volume() - 2.0 * PI * PI).abs() < 1e-10);
        // oracle: int sin(theta) dpsi dtheta dphi / 8 = (4 pi)(2)(2 pi)/8
        let oracle = 4.0 * PI * 2.0 * 2.0 * PI / 8.0;
        assert!((oracle - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn interval_volume() {
        let g = Grid::<f64>::new(GridSpec::new(
            vec![Factor::Interval { n: 33, a: -1.0, b: 2.5 }, Factor::Lobatto { n: 9, a: 0.0, b: 2.0 }],
            None,
        ))
        .unwrap();
        assert!((g.volume() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Grid::<f64>::new(GridSpec::new(vec![], None)).is_err());
        assert!(Grid::<f64>::new(GridSpec::torus(&[4])).is_err());
        let not_last = GridSpec::new(vec![Factor::Circle { n: 8 }, Factor::Circle { n: 8 }], Some(0));
        assert!(Grid::<f64>::new(not_last).is_err());
        let not_circle = GridSpec::new(
            vec![Factor::Circle { n: 8 }, Factor::Interval { n: 8, a: 0.0, b: 1.0 }],
            Some(1),
        );
        assert!(Grid::<f64>::new(not_circle).is_err());
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let g = Grid::<f64>::new(GridSpec::torus(&[64])).unwrap();
        let f: Vec<C<f64>> = g.axes()[0].coords.iter().map(|&t| re(t.sin())).collect();
        let df = g.differentiate(&f, 1, 0).unwrap();
        for (d, &t) in df.iter().zip(&g.axes()[0].coords) {
            assert!((d - re(t.cos())).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let g = Grid::<f64>::new(GridSpec::new(
            vec![Factor::Circle { n: 16 }, Factor::Interval { n: 9, a: 0.0, b: 1.0 }],
            None,
        ))
        .unwrap();
        let f = vec![C::new(1.5, -2.0); g.len() * 4];
        for axis in 0..2 {
            let d = g.differentiate(&f, 4, axis).unwrap();
            assert!(d.iter().all(|z| z.norm() < 1e-12));
        }
        assert!(g.differentiate(&f, 4, 2).is_err());
    }

    #[test]
    fn fourth_order_rule_exact_on_cubics() {
        let g = Grid::<f64>::new(GridSpec::new(vec![Factor::Interval { n: 33, a: 0.0, b: 1.0 }], None)).unwrap();
        let t = &g.axes()[0].coords;
        let f: Vec<C<f64>> = t.iter().map(|&t| re(t * t * t)).collect();
        let d = g.differentiate(&f, 1, 0).unwrap();
        for (d, &t) in d.iter().zip(t) {
            assert!((d.re - 3.0 * t * t).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_derivatives_commute() {
        let g = Grid::<f64>::new(GridSpec::torus(&[16, 12])).unwrap();
        let f: Vec<C<f64>> = (0..g.len())
            .map(|p| {
                let x = g.coords(p);
                C::new((2.0 * x[0]).sin() * x[1].cos(), (x[0] + 3.0 * x[1]).cos())
            })
            .collect();
        let xy = g.differentiate(&g.differentiate(&f, 1, 0).unwrap(), 1, 1).unwrap();
        let yx = g.differentiate(&g.differentiate(&f, 1, 1).unwrap(), 1, 0).unwrap();
        let err = xy.iter().zip(&yx).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err < 1e-10);
    }

    #[test]
    fn remove_and_insert_axes() {
        let g = Grid::<f64>::new(GridSpec::torus_with_loop(&[8, 8], 16)).unwrap();
        let h = g.remove_axis(0).unwrap();
        assert_eq!(h.distinguished_axis(), Some(1));
        let k = g.remove_axis(2).unwrap();
        assert_eq!(k.distinguished_axis(), None);
        let t = g
            .insert_factor(2, Factor::Lobatto { n: 8, a: 0.0, b: 1.0 })
            .unwrap();
        assert_eq!(t.distinguished_axis(), Some(3));
        assert_eq!(t.shape(), &[8, 8, 8, 16]);
    }

    #[test]
    fn descriptor_json_shape() {
        let spec: GridSpec = serde_json::from_str(
            r#"{"factors":[{"kind":"circle","n":64},{"kind":"interval","n":33,"a":0.0,"b":1.0},
                {"kind":"sphere3","n_psi":16,"n_theta":16,"n_phi":32}],"distinguished_circle":null}"#,
        )
        .unwrap();
        assert_eq!(spec.factors.len(), 3);
        assert_eq!(Grid::<f64>::new(spec).unwrap().dim(), 5);
    }
}
