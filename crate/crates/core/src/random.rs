//! Deterministic band-limited random test data.
//!
//! Fields are random trigonometric polynomials: along a periodic axis of
//! length `L` the modes are `exp(2 pi i m x / L)` with `|m| <= band_limit`,
//! along a non-periodic axis they are `cos(m pi s)` with `s` the normalized
//! coordinate and `0 <= m <= band_limit`. Coefficients are complex Gaussians
//! damped by `1 / (1 + |m|^2)` and scaled by `amplitude`.
//!
//! Group-valued data is `exp(X)` of such a field. Since the exponential is
//! not band-limited, keep `amplitude * band_limit` small relative to the
//! sample counts (e.g. `band_limit = 1`, `amplitude <= 0.4` on 16-point
//! circles) when tolerances near `1e-10` are expected.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::MatrixForm;
use crate::geometry::ConnectionPair;
use crate::grid::{AxisKind, Grid};
use crate::lie::GroupMap;
use crate::linalg;
use crate::scalar::{Real, C};

/// Parameters of a random band-limited field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub seed: u64,
    pub band_limit: usize,
    pub amplitude: f64,
}

impl RandomSpec {
    pub fn new(seed: u64, band_limit: usize, amplitude: f64) -> Self {
        Self {
            seed,
            band_limit,
            amplitude,
        }
    }

    /// Same parameters with a derived seed, for independent components.
    pub fn fork(&self, stream: u64) -> Self {
        Self {
            seed: self
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9)),
            ..*self
        }
    }
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self::new(0, 1, 0.3)
    }
}

fn check_band_limit<T: Real>(grid: &Grid<T>, band_limit: usize) -> Result<()> {
    for (i, ax) in grid.axes().iter().enumerate() {
        if ax.kind == AxisKind::Periodic && band_limit >= ax.nyquist() {
            return Err(Error::InvalidArgument(format!(
                "band limit {band_limit} reaches the Nyquist limit {} of axis {i}",
                ax.nyquist()
            )));
        }
    }
    Ok(())
}

/// Random band-limited field of `n x n` complex matrices, point-major.
pub fn band_limited_field<T: Real>(grid: &Arc<Grid<T>>, rank: usize, spec: &RandomSpec) -> Result<Vec<C<T>>> {
    check_band_limit(grid, spec.band_limit)?;
    let b = spec.band_limit as i64;
    // per axis: (mode numbers, table[sample][mode])
    let tables: Vec<(Vec<i64>, Vec<Vec<C<T>>>)> = grid
        .axes()
        .iter()
        .map(|ax| {
            let modes: Vec<i64> = match ax.kind {
                AxisKind::Periodic => (-b..=b).collect(),
                _ => (0..=b).collect(),
            };
            let table = ax
                .coords
                .iter()
                .map(|&x| {
                    modes
                        .iter()
                        .map(|&m| {
                            let mf = T::lit(m as f64);
                            match ax.kind {
                                AxisKind::Periodic => {
                                    let ph = T::lit(2.0) * T::PI() * mf * (x - ax.lo) / ax.length();
                                    Complex::new(ph.cos(), ph.sin())
                                }
                                _ => {
                                    let s = (x - ax.lo) / ax.length();
                                    Complex::new((T::PI() * mf * s).cos(), T::zero())
                                }
                            }
                        })
                        .collect()
                })
                .collect();
            (modes, table)
        })
        .collect();

    let counts: Vec<usize> = tables.iter().map(|(m, _)| m.len()).collect();
    let total: usize = counts.iter().product();
    let block = rank * rank;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coeffs = Vec::with_capacity(total * block);
    for flat in 0..total {
        let mut rest = flat;
        let mut m2 = 0i64;
        for (d, &c) in counts.iter().enumerate().rev() {
            let m = tables[d].0[rest % c];
            m2 += m * m;
            rest /= c;
        }
        let damp = spec.amplitude / (1.0 + m2 as f64);
        for _ in 0..block {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            coeffs.push(Complex::new(T::lit(re * damp), T::lit(im * damp)));
        }
    }

    let dim = grid.dim();
    let mut out = vec![Complex::zero(); grid.len() * block];
    out.par_chunks_mut(block)
        .with_min_len(64)
        .enumerate()
        .for_each(|(p, dst)| {
            let idx = grid.unravel(p);
            for flat in 0..total {
                let mut rest = flat;
                let mut basis = Complex::new(T::one(), T::zero());
                for d in (0..dim).rev() {
                    let c = counts[d];
                    basis *= tables[d].1[idx[d]][rest % c];
                    rest /= c;
                }
                for (o, c) in dst.iter_mut().zip(&coeffs[flat * block..(flat + 1) * block]) {
                    *o += *c * basis;
                }
            }
        });
    Ok(out)
}

/// `(Y - Y*) / 2` pointwise.
pub fn anti_hermitian_part<T: Real>(field: &mut [C<T>], rank: usize) {
    for m in field.chunks_mut(rank * rank) {
        let adj = linalg::adjoint(m, rank);
        for (a, b) in m.iter_mut().zip(&adj) {
            *a = (*a - *b) * T::lit(0.5);
        }
    }
}

/// Subtract the value on the `theta = 0` slice of the distinguished circle.
fn make_based<T: Real>(grid: &Grid<T>, field: &mut [C<T>], block: usize) -> Result<()> {
    let theta = grid.distinguished_axis().ok_or(Error::NoDistinguishedCircle)?;
    let n_theta = grid.shape()[theta];
    for base in field.chunks_mut(n_theta * block) {
        let zero: Vec<C<T>> = base[..block].to_vec();
        for m in base.chunks_mut(block) {
            for (a, z) in m.iter_mut().zip(&zero) {
                *a -= *z;
            }
        }
    }
    Ok(())
}

/// Random Lie-algebra-valued function (anti-Hermitian if requested).
pub fn random_algebra_field<T: Real>(
    grid: &Arc<Grid<T>>,
    rank: usize,
    spec: &RandomSpec,
    anti_hermitian: bool,
    based: bool,
) -> Result<MatrixForm<T>> {
    let mut f = band_limited_field(grid, rank, spec)?;
    if anti_hermitian {
        anti_hermitian_part(&mut f, rank);
    }
    if based {
        make_based(grid, &mut f, rank * rank)?;
    }
    MatrixForm::function(grid, rank, f)
}

/// Random 1-form with components only along the axes in `axes_mask`.
pub fn random_one_form<T: Real>(
    grid: &Arc<Grid<T>>,
    rank: usize,
    spec: &RandomSpec,
    anti_hermitian: bool,
    based: bool,
    axes_mask: u32,
) -> Result<MatrixForm<T>> {
    let mut comps = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        if axes_mask & (1 << axis) == 0 {
            comps.push(vec![Complex::zero(); grid.len() * rank * rank]);
        } else {
            let f = random_algebra_field(grid, rank, &spec.fork(axis as u64 + 1), anti_hermitian, based)?;
            comps.push(f.into_components().remove(0));
        }
    }
    MatrixForm::one_form(grid, rank, comps)
}

/// Random smooth map `exp(X)` into `GL(n)` (or `U(n)` when `unitary`).
/// With `based`, `X` vanishes on the `theta = 0` slice so `g` is the
/// identity there.
pub fn random_smooth_map<T: Real>(
    grid: &Arc<Grid<T>>,
    rank: usize,
    spec: &RandomSpec,
    unitary: bool,
    based: bool,
) -> Result<GroupMap<T>> {
    let x = random_algebra_field(grid, rank, spec, unitary, based)?;
    let x = x.into_components().remove(0);
    let block = rank * rank;
    let mut values = vec![Complex::zero(); x.len()];
    values
        .par_chunks_mut(block)
        .zip(x.par_chunks(block))
        .for_each(|(dst, src)| dst.copy_from_slice(&linalg::expm(src, rank)));
    if based {
        // exp(0) is the identity up to rounding in the Pade denominator
        let theta = grid.distinguished_axis().ok_or(Error::NoDistinguishedCircle)?;
        let id = linalg::identity::<T>(rank);
        for p in 0..grid.len() {
            if grid.index_along(p, theta) == 0 {
                values[p * block..(p + 1) * block].copy_from_slice(&id);
            }
        }
    }
    GroupMap::new(grid, rank, values, unitary, based)
}

/// Random connection pair on `M x S^1`: a based 1-form `A` along the base
/// axes and a Higgs field `Phi`, both anti-Hermitian when `unitary`.
pub fn random_pair<T: Real>(
    grid: &Arc<Grid<T>>,
    rank: usize,
    spec: &RandomSpec,
    unitary: bool,
) -> Result<ConnectionPair<T>> {
    let theta = grid.distinguished_axis().ok_or(Error::NoDistinguishedCircle)?;
    let base_mask = ((1u32 << grid.dim()) - 1) & !(1 << theta);
    let a = random_one_form(grid, rank, &spec.fork(101), unitary, true, base_mask)?;
    let phi = random_algebra_field(grid, rank, &spec.fork(202), unitary, false)?;
    ConnectionPair::new(a, phi, unitary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn deterministic_in_seed() {
        let g = Grid::<f64>::new(GridSpec::torus(&[8, 8])).unwrap();
        let spec = RandomSpec::new(42, 2, 0.5);
        let a = band_limited_field(&g, 2, &spec).unwrap();
        let b = band_limited_field(&g, 2, &spec).unwrap();
        assert_eq!(a, b);
        let c = band_limited_field(&g, 2, &RandomSpec::new(43, 2, 0.5)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_band_limit_at_nyquist() {
        let g = Grid::<f64>::new(GridSpec::torus(&[8])).unwrap();
        assert!(band_limited_field(&g, 1, &RandomSpec::new(0, 4, 0.1)).is_err());
        assert!(band_limited_field(&g, 1, &RandomSpec::new(0, 3, 0.1)).is_ok());
    }

    #[test]
    fn unitary_and_based_maps() {
        let g = Grid::<f64>::new(GridSpec::torus_with_loop(&[8], 16)).unwrap();
        let m = random_smooth_map(&g, 2, &RandomSpec::new(3, 1, 0.5), true, true).unwrap();
        assert!(m.unitarity_defect() <= 1e-12);
        assert!(m.basedness_defect().unwrap() <= 1e-14);
    }

    #[test]
    fn random_pair_is_valid() {
        let g = Grid::<f64>::new(GridSpec::torus_with_loop(&[8, 8], 16)).unwrap();
        let p = random_pair(&g, 2, &RandomSpec::new(9, 1, 0.3), true).unwrap();
        assert_eq!(p.rank(), 2);
    }
}
