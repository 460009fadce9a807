//! One-dimensional quadrature and differentiation rules.

use crate::scalar::Real;

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    for i in 0..(n + 1) / 2 {
        let mut x = (T::PI() * (T::of(i) + T::lit(0.75)) / (T::of(n) + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::lit(2.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != T::zero() {
            dp = d;
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = w * half;
        weights[n - 1 - i] = w * half;
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::of(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::of(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Gauss-Lobatto-Legendre nodes (ascending, endpoints included) and
/// weights on `[a, b]`.
pub fn gauss_lobatto<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    assert!(n >= 2, "Lobatto rule needs both endpoints");
    let deg = n - 1;
    let mut x: Vec<T> = (0..n)
        .map(|k| (T::PI() * T::of(k) / T::of(deg)).cos())
        .collect();
    let mut pn = vec![T::zero(); n];
    for _ in 0..200 {
        let mut delta = T::zero();
        for (xi, p_out) in x.iter_mut().zip(pn.iter_mut()) {
            let mut p0 = T::one();
            let mut p1 = *xi;
            for k in 2..=deg {
                let kf = T::of(k);
                let p2 = ((T::lit(2.0) * kf - T::one()) * *xi * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_deg, p0 = P_{deg-1}
            let step = (*xi * p1 - p0) / (T::of(n) * p1);
            *xi = *xi - step;
            *p_out = p1;
            delta = delta.max(step.abs());
        }
        if delta <= T::epsilon() * T::lit(2.0) {
            break;
        }
    }
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let nodes: Vec<T> = x.iter().rev().map(|&xi| mid + half * xi).collect();
    let weights: Vec<T> = pn
        .iter()
        .rev()
        .map(|&p| half * T::lit(2.0) / (T::of(deg * n) * p * p))
        .collect();
    let mut nodes = nodes;
    nodes[0] = a;
    nodes[n - 1] = b;
    (nodes, weights)
}

/// Weights of the uniform-sample rule on `n` points with spacing `h`:
/// trapezoid with Gregory endpoint corrections, exact for polynomials of
/// degree 5 when `n >= 10` and degree 3 when `6 <= n < 10`.
pub fn gregory_weights<T: Real>(n: usize, h: T) -> Vec<T> {
    let ends: &[f64] = if n >= 10 {
        &[95.0 / 288.0, 317.0 / 240.0, 23.0 / 30.0, 793.0 / 720.0, 157.0 / 160.0]
    } else if n >= 6 {
        &[3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0]
    } else if n >= 2 {
        &[0.5]
    } else {
        &[]
    };
    let mut w = vec![h; n];
    for (k, &e) in ends.iter().enumerate() {
        w[k] = h * T::lit(e);
        w[n - 1 - k] = h * T::lit(e);
    }
    w
}

/// Dense Fourier differentiation matrix (row-major) for `n` equispaced
/// samples of a function with the given period.
pub fn periodic_diff_matrix<T: Real>(n: usize, period: T) -> Vec<T> {
    let mut d = vec![T::zero(); n * n];
    let h = T::lit(2.0) * T::PI() / T::of(n);
    let scale = T::lit(2.0) * T::PI() / period;
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let diff = j as isize - k as isize;
            let sign = if diff.rem_euclid(2) == 0 { T::one() } else { -T::one() };
            let x = T::lit(diff as f64) * h / T::lit(2.0);
            let v = if n % 2 == 0 {
                T::lit(0.5) * sign / x.tan()
            } else {
                T::lit(0.5) * sign / x.sin()
            };
            d[j * n + k] = v * scale;
        }
    }
    d
}

/// Weights of band-limited trigonometric interpolation at the point `x`
/// (same units as the samples, which sit at `k * period / n`).
pub fn periodic_interp_weights<T: Real>(n: usize, period: T, x: T) -> Vec<T> {
    let two_pi = T::lit(2.0) * T::PI();
    let nf = T::of(n);
    (0..n)
        .map(|k| {
            let xk = period * T::of(k) / nf;
            let u = (x - xk) * two_pi / period;
            let s = (u / T::lit(2.0)).sin();
            if s.abs() < T::epsilon() * T::lit(16.0) {
                // the kernel is 2 pi periodic with value one at every node
                T::one()
            } else if n % 2 == 0 {
                (nf * u / T::lit(2.0)).sin() * (u / T::lit(2.0)).cos() / (nf * s)
            } else {
                (nf * u / T::lit(2.0)).sin() / (nf * s)
            }
        })
        .collect()
}

/// Polynomial collocation differentiation matrix on arbitrary distinct
/// nodes (barycentric form), row-major.
pub fn collocation_diff_matrix<T: Real>(nodes: &[T]) -> Vec<T> {
    let n = nodes.len();
    let lambda: Vec<T> = (0..n)
        .map(|j| {
            let p = (0..n)
                .filter(|&k| k != j)
                .fold(T::one(), |acc, k| acc * (nodes[j] - nodes[k]));
            T::one() / p
        })
        .collect();
    let mut d = vec![T::zero(); n * n];
    for i in 0..n {
        let mut diag = T::zero();
        for j in 0..n {
            if i != j {
                let v = (lambda[j] / lambda[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag = diag - v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

/// Fourth-order finite-difference stencil for the derivative at sample `i`
/// of `n >= 5` uniform samples with spacing `h`: `(first index, weights)`.
pub fn fd4_stencil<T: Real>(i: usize, n: usize, h: T) -> (usize, [T; 5]) {
    let c = |w: [f64; 5]| w.map(|v| T::lit(v) / (T::lit(12.0) * h));
    match i {
        0 => (0, c([-25.0, 48.0, -36.0, 16.0, -3.0])),
        1 => (0, c([-3.0, -10.0, 18.0, -6.0, 1.0])),
        _ if i == n - 1 => (n - 5, c([3.0, -16.0, 36.0, -48.0, 25.0])),
        _ if i == n - 2 => (n - 5, c([-1.0, 6.0, -18.0, 10.0, 3.0])),
        _ => (i - 2, c([1.0, -8.0, 0.0, 8.0, -1.0])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..8 {
            let (x, w) = gauss_legendre::<f64>(n, 0.0, 1.0);
            for k in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn lobatto_exactness_and_endpoints() {
        for n in [2usize, 3, 5, 8, 17] {
            let (x, w) = gauss_lobatto::<f64>(n, 0.0, 2.0);
            assert_eq!(x[0], 0.0);
            assert_eq!(x[n - 1], 2.0);
            for k in 0..(2 * n - 2) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let want = 2f64.powi(k as i32 + 1) / (k as f64 + 1.0);
                assert!((s - want).abs() < 1e-12 * want.max(1.0), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn gregory_exact_through_quintics() {
        for n in [10usize, 11, 17, 33] {
            let h = 1.0 / (n as f64 - 1.0);
            let w = gregory_weights::<f64>(n, h);
            for k in 0..=5 {
                let s: f64 = (0..n).map(|i| w[i] * (i as f64 * h).powi(k)).sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fd4_exact_on_quartics() {
        let n = 9;
        let h = 0.25;
        for i in 0..n {
            let (s, w) = fd4_stencil::<f64>(i, n, h);
            let d: f64 = (0..5).map(|m| w[m] * ((s + m) as f64 * h).powi(4)).sum();
            let x = i as f64 * h;
            assert!((d - 4.0 * x.powi(3)).abs() < 1e-11);
        }
    }

    #[test]
    fn periodic_interpolation_reproduces_trig_polynomials() {
        for n in [8usize, 9, 16] {
            let period = 2.0 * std::f64::consts::PI;
            let f = |x: f64| (2.0 * x).sin() + 0.3 * x.cos();
            let samples: Vec<f64> = (0..n).map(|k| f(period * k as f64 / n as f64)).collect();
            for &x in &[0.1, 1.7, 3.3, 0.0] {
                let w = periodic_interp_weights::<f64>(n, period, x);
                let v: f64 = w.iter().zip(&samples).map(|(a, b)| a * b).sum();
                assert!((v - f(x)).abs() < 1e-13, "n={n} x={x}");
            }
        }
    }
}
