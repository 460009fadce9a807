//! Connection data on `M x S^1` and the caloron transform.
//!
//! A [`ConnectionPair`] `(A, Phi)` lives on a grid whose last axis is the
//! distinguished circle `theta`. `A` is a 1-form along the base axes that
//! vanishes on the `theta = 0` slice; `Phi` is a matrix-valued function
//! (its deviation from the trivial Higgs field). The caloron transform is
//! the framed connection `a = A + Phi dtheta`.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::MatrixForm;
use crate::grid::{same_grid, Factor, Grid};
use crate::lie::{self, GroupMap};
use crate::linalg;
use crate::scalar::{Real, C};

/// Tolerance of the basedness and framing checks.
pub const FRAMING_TOL: f64 = 1e-12;
/// Tolerance of the anti-Hermitian check for unitary data.
pub const HERMITIAN_TOL: f64 = 1e-10;

fn theta_axis<T: Real>(grid: &Grid<T>) -> Result<usize> {
    grid.distinguished_axis().ok_or(Error::NoDistinguishedCircle)
}

fn base_mask<T: Real>(grid: &Grid<T>) -> Result<u32> {
    let theta = theta_axis(grid)?;
    Ok(((1u32 << grid.dim()) - 1) & !(1 << theta))
}

/// Largest base-direction coefficient of `a` on the `theta = 0` slice.
fn zero_slice_defect<T: Real>(a: &MatrixForm<T>, theta: usize) -> T {
    let grid = a.grid();
    let block = a.block();
    let mut worst = T::zero();
    for (&mask, c) in a.masks().iter().zip(a.components()) {
        if mask & (1 << theta) != 0 {
            continue;
        }
        for p in (0..grid.len()).filter(|&p| grid.index_along(p, theta) == 0) {
            worst = worst.max(linalg::max_abs(&c[p * block..(p + 1) * block]));
        }
    }
    worst
}

/// `sup |X + X*|`.
pub fn hermitian_defect<T: Real>(x: &MatrixForm<T>) -> T {
    x.add(&x.adjoint()).expect("same shape").max_abs()
}

/// Trivialized (module connection, Higgs field) data.
#[derive(Clone, Debug)]
pub struct ConnectionPair<T: Real> {
    a: MatrixForm<T>,
    phi: MatrixForm<T>,
    unitary: bool,
}

impl<T: Real> ConnectionPair<T> {
    pub fn new(a: MatrixForm<T>, phi: MatrixForm<T>, unitary: bool) -> Result<Self> {
        let grid = a.grid().clone();
        let theta = theta_axis(&grid)?;
        if !same_grid(&grid, phi.grid()) {
            return Err(Error::GridMismatch);
        }
        if a.degree() != 1 || phi.degree() != 0 {
            return Err(Error::Degree("a pair needs a 1-form A and a function Phi".into()));
        }
        if a.rank() != phi.rank() {
            return Err(Error::RankMismatch(a.rank(), phi.rank()));
        }
        if a.component(1 << theta).iter().any(|z| !z.is_zero()) {
            return Err(Error::Invariant("A has a dtheta component".into()));
        }
        let based = zero_slice_defect(&a, theta);
        if based > T::lit(FRAMING_TOL) {
            return Err(Error::Invariant(format!("A is not based: defect {based:e}")));
        }
        if unitary {
            let h = hermitian_defect(&a).max(hermitian_defect(&phi));
            if h > T::lit(HERMITIAN_TOL) {
                return Err(Error::Invariant(format!("pair is not anti-Hermitian: defect {h:e}")));
            }
        }
        Ok(Self { a, phi, unitary })
    }

    /// The trivial pair `(0, 0)`.
    pub fn trivial(grid: &Arc<Grid<T>>, rank: usize) -> Result<Self> {
        Self::new(MatrixForm::zeros(grid, 1, rank), MatrixForm::zeros(grid, 0, rank), true)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.a.grid()
    }

    pub fn rank(&self) -> usize {
        self.a.rank()
    }

    pub fn a(&self) -> &MatrixForm<T> {
        &self.a
    }

    pub fn phi(&self) -> &MatrixForm<T> {
        &self.phi
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Bitmask of the base axes.
    pub fn base_mask(&self) -> u32 {
        base_mask(self.grid()).expect("pair grids have a distinguished circle")
    }

    pub fn theta_axis(&self) -> usize {
        self.grid().distinguished_axis().expect("pair grids have a distinguished circle")
    }

    /// Framed connection `A + Phi dtheta`.
    pub fn caloron_transform(&self) -> FramedConnection<T> {
        let theta = self.theta_axis();
        let mut a = self.a.clone();
        a.component_mut(1 << theta).copy_from_slice(&self.phi.components()[0]);
        FramedConnection {
            a,
            unitary: self.unitary,
        }
    }

    /// Base curvature `R = d_M A + A ^ A`.
    pub fn base_curvature(&self) -> MatrixForm<T> {
        self.a
            .d_axes(self.base_mask())
            .add(&self.a.wedge(&self.a).expect("same grid"))
            .expect("same shape")
    }

    /// Higgs covariant derivative `d_M Phi + [A, Phi] - partial_theta A`.
    pub fn higgs_covariant_derivative(&self) -> MatrixForm<T> {
        let theta = self.theta_axis();
        let comm = self.a.graded_commutator(&self.phi).expect("same grid");
        let dtheta_a = self.a.partial(theta).expect("valid axis");
        self.phi
            .d_axes(self.base_mask())
            .add(&comm)
            .and_then(|x| x.sub(&dtheta_a))
            .expect("same shape")
    }

    /// Holonomy of `Phi` around each fiber circle, as a map on the base.
    pub fn higgs_holonomy_map(&self, steps: usize) -> Result<GroupMap<T>> {
        let grid = self.grid();
        let theta = self.theta_axis();
        let base = grid.remove_axis(theta)?;
        let n_theta = grid.shape()[theta];
        let rank = self.rank();
        let block = rank * rank;
        let phi = &self.phi.components()[0];
        let values: Vec<Vec<C<T>>> = (0..base.len())
            .into_par_iter()
            .map(|q| lie::holonomy(&phi[q * n_theta * block..(q + 1) * n_theta * block], rank, steps, self.unitary))
            .collect::<Result<_>>()?;
        GroupMap::new(&base, rank, values.concat(), self.unitary, false)
    }

    /// Block direct sum of two pairs.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.a.block_sum(&other.a)?,
            self.phi.block_sum(&other.phi)?,
            self.unitary && other.unitary,
        )
    }

    /// `(1 - t) self + t other`.
    pub fn lerp(&self, other: &Self, t: T) -> Result<Self> {
        let s = Complex::new(T::one() - t, T::zero());
        let u = Complex::new(t, T::zero());
        let mut a = self.a.scale(s);
        a.axpy(u, &other.a)?;
        let mut phi = self.phi.scale(s);
        phi.axpy(u, &other.phi)?;
        Self::new(a, phi, self.unitary && other.unitary)
    }

    /// `(A_1 - A_0, Phi_1 - Phi_0)`, the velocity of the straight line.
    pub fn difference(&self, other: &Self) -> Result<(MatrixForm<T>, MatrixForm<T>)> {
        Ok((other.a.sub(&self.a)?, other.phi.sub(&self.phi)?))
    }
}

/// Connection on `M x S^1` that is trivial along the base on `theta = 0`.
#[derive(Clone, Debug)]
pub struct FramedConnection<T: Real> {
    a: MatrixForm<T>,
    unitary: bool,
}

impl<T: Real> FramedConnection<T> {
    pub fn new(a: MatrixForm<T>, unitary: bool) -> Result<Self> {
        let theta = theta_axis(a.grid())?;
        if a.degree() != 1 {
            return Err(Error::Degree("a framed connection is a 1-form".into()));
        }
        let defect = zero_slice_defect(&a, theta);
        if defect > T::lit(FRAMING_TOL) {
            return Err(Error::Invariant(format!("framing defect {defect:e}")));
        }
        if unitary {
            let h = hermitian_defect(&a);
            if h > T::lit(HERMITIAN_TOL) {
                return Err(Error::Invariant(format!("connection is not anti-Hermitian: defect {h:e}")));
            }
        }
        Ok(Self { a, unitary })
    }

    pub fn form(&self) -> &MatrixForm<T> {
        &self.a
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Split `a` into base components `A` and the `dtheta` component `Phi`.
    pub fn inverse_caloron(&self) -> Result<ConnectionPair<T>> {
        let grid = self.a.grid();
        let theta = theta_axis(grid)?;
        let mut a = self.a.clone();
        let phi_values = std::mem::replace(
            a.component_mut(1 << theta),
            vec![Complex::zero(); grid.len() * self.a.block()],
        );
        let phi = MatrixForm::function(grid, self.a.rank(), phi_values)?;
        ConnectionPair::new(a, phi, self.unitary)
    }

    pub fn curvature(&self) -> MatrixForm<T> {
        curvature(&self.a)
    }
}

/// `F = d a + a ^ a`.
pub fn curvature<T: Real>(a: &MatrixForm<T>) -> MatrixForm<T> {
    a.d().add(&a.wedge(a).expect("same grid")).expect("same shape")
}

/// A path of connection pairs over `t in [0, 1]`.
#[derive(Clone, Debug)]
pub enum PairPath<T: Real> {
    /// `(1 - t) p0 + t p1`.
    StraightLine {
        p0: ConnectionPair<T>,
        p1: ConnectionPair<T>,
    },
    /// Pairs sampled at the nodes of a non-periodic factor over `[0, 1]`.
    Sampled {
        t_factor: Factor,
        pairs: Vec<ConnectionPair<T>>,
    },
}

impl<T: Real> PairPath<T> {
    pub fn straight_line(p0: ConnectionPair<T>, p1: ConnectionPair<T>) -> Result<Self> {
        if !same_grid(p0.grid(), p1.grid()) {
            return Err(Error::GridMismatch);
        }
        if p0.rank() != p1.rank() {
            return Err(Error::RankMismatch(p0.rank(), p1.rank()));
        }
        Ok(Self::StraightLine { p0, p1 })
    }

    /// Sampled path `t -> f(t)` at the nodes of `t_factor`.
    pub fn from_fn<F>(t_factor: Factor, f: F) -> Result<Self>
    where
        F: Fn(T) -> Result<ConnectionPair<T>>,
    {
        let nodes = t_nodes::<T>(&t_factor)?;
        let pairs = nodes.into_iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::sampled(t_factor, pairs)
    }

    pub fn sampled(t_factor: Factor, pairs: Vec<ConnectionPair<T>>) -> Result<Self> {
        let nodes = t_nodes::<T>(&t_factor)?;
        if pairs.len() != nodes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} pairs for {} parameter samples",
                pairs.len(),
                nodes.len()
            )));
        }
        for p in &pairs {
            if !same_grid(p.grid(), pairs[0].grid()) {
                return Err(Error::GridMismatch);
            }
            if p.rank() != pairs[0].rank() {
                return Err(Error::RankMismatch(p.rank(), pairs[0].rank()));
            }
        }
        Ok(Self::Sampled { t_factor, pairs })
    }

    /// Materialize a straight line (or resample nothing for sampled paths)
    /// at the nodes of `t_factor`.
    pub fn sample(&self, t_factor: Factor) -> Result<Self> {
        match self {
            Self::StraightLine { p0, p1 } => Self::from_fn(t_factor, |t| p0.lerp(p1, t)),
            Self::Sampled { .. } => Ok(self.clone()),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.start().grid()
    }

    pub fn rank(&self) -> usize {
        self.start().rank()
    }

    pub fn start(&self) -> &ConnectionPair<T> {
        match self {
            Self::StraightLine { p0, .. } => p0,
            Self::Sampled { pairs, .. } => &pairs[0],
        }
    }

    pub fn end(&self) -> &ConnectionPair<T> {
        match self {
            Self::StraightLine { p1, .. } => p1,
            Self::Sampled { pairs, .. } => pairs.last().expect("nonempty"),
        }
    }

    pub fn is_unitary(&self) -> bool {
        match self {
            Self::StraightLine { p0, p1 } => p0.is_unitary() && p1.is_unitary(),
            Self::Sampled { pairs, .. } => pairs.iter().all(ConnectionPair::is_unitary),
        }
    }
}

/// Nodes of a parameter factor, which must be a non-periodic factor over
/// `[0, 1]`.
pub fn t_nodes<T: Real>(t_factor: &Factor) -> Result<Vec<T>> {
    match *t_factor {
        Factor::Interval { a, b, .. } | Factor::Lobatto { a, b, .. } if a == 0.0 && b == 1.0 => {
            let g = Grid::<T>::new(crate::grid::GridSpec::new(vec![t_factor.clone()], None))?;
            Ok(g.axes()[0].coords.clone())
        }
        _ => Err(Error::InvalidArgument(
            "path parameter factor must be an interval over [0, 1]".into(),
        )),
    }
}

/// Grid `M x [t] x S^1` (or `M x [t]` without a loop circle): the parameter
/// factor is inserted just before the distinguished circle, or appended.
pub fn path_grid<T: Real>(grid: &Arc<Grid<T>>, t_factor: &Factor) -> Result<(Arc<Grid<T>>, usize)> {
    let nf = grid.spec().factors.len();
    let at = match grid.spec().distinguished_circle {
        Some(d) => d,
        None => nf,
    };
    let big = grid.insert_factor(at, t_factor.clone())?;
    let t_axis = big.factor_axis(at).expect("inserted factor has an axis");
    Ok((big, t_axis))
}
