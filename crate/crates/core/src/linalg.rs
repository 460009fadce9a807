//! Small dense complex matrices stored row-major in flat slices.
//!
//! Every per-point matrix in the toolkit is an `n x n` block of `n * n`
//! contiguous coefficients; these helpers operate on such blocks.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{Real, C};

pub fn identity<T: Real>(n: usize) -> Vec<C<T>> {
    let mut m = vec![C::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = C::one();
    }
    m
}

/// `out += s * a * b`.
#[inline]
pub fn gemm_acc<T: Real>(out: &mut [C<T>], s: C<T>, a: &[C<T>], b: &[C<T>], n: usize) {
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k] * s;
            if aik.is_zero() {
                continue;
            }
            let row = &b[k * n..k * n + n];
            let dst = &mut out[i * n..i * n + n];
            for (d, &bkj) in dst.iter_mut().zip(row) {
                *d += aik * bkj;
            }
        }
    }
}

pub fn matmul<T: Real>(a: &[C<T>], b: &[C<T>], n: usize) -> Vec<C<T>> {
    let mut out = vec![C::zero(); n * n];
    gemm_acc(&mut out, C::one(), a, b, n);
    out
}

pub fn adjoint<T: Real>(a: &[C<T>], n: usize) -> Vec<C<T>> {
    let mut out = vec![C::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

pub fn trace<T: Real>(a: &[C<T>], n: usize) -> C<T> {
    (0..n).fold(C::zero(), |acc, i| acc + a[i * n + i])
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(a: &[C<T>]) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

pub fn max_abs_diff<T: Real>(a: &[C<T>], b: &[C<T>]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()))
}

/// Induced 1-norm (max column sum).
pub fn norm1<T: Real>(a: &[C<T>], n: usize) -> T {
    (0..n)
        .map(|j| (0..n).fold(T::zero(), |s, i| s + a[i * n + j].norm()))
        .fold(T::zero(), T::max)
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
pub fn inverse<T: Real>(a: &[C<T>], n: usize) -> Option<Vec<C<T>>> {
    let mut m = a.to_vec();
    let mut inv = identity::<T>(n);
    let scale = max_abs(a);
    if scale == T::zero() {
        return None;
    }
    let tiny = scale * T::epsilon() * T::of(n.max(1));
    for col in 0..n {
        let (piv, pmag) = (col..n)
            .map(|r| (r, m[r * n + col].norm()))
            .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmag <= tiny {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let p = m[col * n + col].inv();
        for j in 0..n {
            m[col * n + j] *= p;
            inv[col * n + j] *= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                let mj = m[col * n + j];
                let ij = inv[col * n + j];
                m[r * n + j] -= f * mj;
                inv[r * n + j] -= f * ij;
            }
        }
    }
    Some(inv)
}

/// Matrix exponential by scaling and squaring with a diagonal (6,6) Pade
/// approximant.
pub fn expm<T: Real>(a: &[C<T>], n: usize) -> Vec<C<T>> {
    const Q: usize = 6;
    let norm = norm1(a, n);
    let half = T::lit(0.5);
    let mut squarings = 0usize;
    let mut s = T::one();
    while norm * s > half {
        s = s * half;
        squarings += 1;
    }
    let x: Vec<C<T>> = a.iter().map(|z| *z * s).collect();

    // c_k = (2q - k)! q! / ((2q)! k! (q - k)!)
    let mut coeffs = vec![T::one(); Q + 1];
    for k in 1..=Q {
        coeffs[k] = coeffs[k - 1] * T::of(Q + 1 - k) / (T::of(k) * T::of(2 * Q + 1 - k));
    }

    let mut num = identity::<T>(n);
    let mut den = identity::<T>(n);
    let mut power = identity::<T>(n);
    for (k, &c) in coeffs.iter().enumerate().skip(1) {
        power = matmul(&power, &x, n);
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        for ((nm, dn), p) in num.iter_mut().zip(den.iter_mut()).zip(&power) {
            *nm += *p * c;
            *dn += *p * (c * sign);
        }
    }
    let den_inv = inverse(&den, n).expect("Pade denominator is well conditioned after scaling");
    let mut out = matmul(&den_inv, &num, n);
    for _ in 0..squarings {
        out = matmul(&out, &out, n);
    }
    out
}

/// Unitary factor of the polar decomposition via the Newton iteration
/// `X <- (X + X^{-*}) / 2`. Intended for nearly unitary input.
pub fn polar_unitary<T: Real>(a: &[C<T>], n: usize) -> Vec<C<T>> {
    let mut x = a.to_vec();
    let half = T::lit(0.5);
    for _ in 0..32 {
        let Some(inv) = inverse(&x, n) else {
            return x;
        };
        let inv_adj = adjoint(&inv, n);
        let next: Vec<C<T>> = x
            .iter()
            .zip(&inv_adj)
            .map(|(p, q)| (*p + *q) * half)
            .collect();
        let delta = max_abs_diff(&next, &x);
        x = next;
        if delta <= T::epsilon() * T::lit(4.0) {
            break;
        }
    }
    x
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diag<T: Real>(a: &[C<T>], na: usize, b: &[C<T>], nb: usize) -> Vec<C<T>> {
    let n = na + nb;
    let mut out = vec![Complex::zero(); n * n];
    for i in 0..na {
        out[i * n..i * n + na].copy_from_slice(&a[i * na..i * na + na]);
    }
    for i in 0..nb {
        let r = na + i;
        out[r * n + na..r * n + n].copy_from_slice(&b[i * nb..i * nb + nb]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, scale: f64, seed: u64) -> Vec<C<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * n)
            .map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale)
            .collect()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = vec![C::<f64>::zero(); 9];
        assert_eq!(expm(&z, 3), identity::<f64>(3));
    }

    #[test]
    fn exp_diag_i_pi() {
        let a = vec![C::new(0.0, std::f64::consts::PI), C::zero(), C::zero(), C::zero()];
        let e = expm(&a, 2);
        let want = [C::new(-1.0, 0.0), C::zero(), C::zero(), C::one()];
        assert!(max_abs_diff(&e, &want) < 1e-14);
    }

    #[test]
    fn exp_inverse_pair() {
        for seed in 0..10 {
            let x = random(3, 2.0, seed);
            let mx: Vec<_> = x.iter().map(|z| -z).collect();
            let p = matmul(&expm(&x, 3), &expm(&mx, 3), 3);
            assert!(max_abs_diff(&p, &identity::<f64>(3)) < 1e-12);
        }
    }

    #[test]
    fn exp_large_norm_against_diagonalizable_reference() {
        // diag(z1, z2) conjugated by a fixed invertible matrix
        let p = [C::new(1.0, 0.0), C::new(0.3, 0.1), C::new(-0.2, 0.4), C::new(1.0, -0.2)];
        let pinv = inverse(&p, 2).unwrap();
        let z1 = C::new(2.0, 6.5);
        let z2 = C::new(-3.0, -5.0);
        let d = [z1, C::zero(), C::zero(), z2];
        let a = matmul(&matmul(&p, &d, 2), &pinv, 2);
        let ed = [z1.exp(), C::zero(), C::zero(), z2.exp()];
        let want = matmul(&matmul(&p, &ed, 2), &pinv, 2);
        let got = expm(&a, 2);
        assert!(max_abs_diff(&got, &want) / max_abs(&want) < 1e-12);
    }

    #[test]
    fn inverse_roundtrip_and_singular() {
        let a = random(4, 1.0, 3);
        let p = matmul(&a, &inverse(&a, 4).unwrap(), 4);
        assert!(max_abs_diff(&p, &identity::<f64>(4)) < 1e-12);
        let s = vec![C::new(1.0, 0.0), C::new(2.0, 0.0), C::new(2.0, 0.0), C::new(4.0, 0.0)];
        assert!(inverse(&s, 2).is_none());
    }

    #[test]
    fn polar_projection_restores_unitarity() {
        let x: Vec<_> = random(3, 1.0, 5);
        let h: Vec<_> = x
            .iter()
            .zip(adjoint(&x, 3))
            .map(|(a, b)| (*a - b) * 0.5)
            .collect();
        let mut u = expm(&h, 3);
        u[1] += C::new(1e-6, -2e-6);
        let q = polar_unitary(&u, 3);
        let qq = matmul(&adjoint(&q, 3), &q, 3);
        assert!(max_abs_diff(&qq, &identity::<f64>(3)) < 1e-14);
    }
}
