//! Chebyshev–Gauss–Lobatto nodes and spectral differentiation.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

/// `n + 1` Chebyshev–Gauss–Lobatto nodes on `[a, b]`, ascending.
pub fn cheb_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..=n)
        .map(|j| {
            // x_j = −cos(jπ/n), written through sin for symmetric rounding.
            let x = math::sin(PI * (2.0 * j as f64 - n as f64) / (2.0 * n as f64));
            if j == 0 {
                a
            } else if j == n {
                b
            } else {
                mid + half * x
            }
        })
        .collect()
}

/// Derivative of the interpolant of `values` sampled at [`cheb_nodes`]
/// on `[a, b]`, at the same nodes.
///
/// Applies the differentiation matrix row by row (`O(n²)`), with node
/// differences computed from the sine identity and diagonal entries from the
/// negative-sum trick.
pub fn cheb_diff(values: &[f64], a: f64, b: f64) -> Vec<f64> {
    let m = values.len();
    assert!(m >= 2, "need at least two nodes");
    let n = m - 1;
    let nf = n as f64;
    // Ascending nodes x_j = −cos(jπ/n); x_i − x_j = 2 sin((i+j)π/2n) sin((i−j)π/2n).
    let c = |j: usize| -> f64 {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            2.0 * s
        } else {
            s
        }
    };
    let scale = 2.0 / (b - a);
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let ci = c(i);
        let mut acc = 0.0;
        let mut diag = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let dx = 2.0
                * math::sin((i + j) as f64 * PI / (2.0 * nf))
                * math::sin((i as f64 - j as f64) * PI / (2.0 * nf));
            let d = ci / c(j) / dx;
            acc += d * values[j];
            diag -= d;
        }
        out.push(scale * (acc + diag * values[i]));
    }
    out
}

/// Clenshaw–Curtis weights for [`cheb_nodes`] on `[a, b]`.
pub fn clenshaw_curtis_weights(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut w = alloc::vec![0.0; n + 1];
    let nf = n as f64;
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = j as f64 * PI / nf;
        let mut s = 1.0;
        for k in 1..=(n / 2) {
            let bk = if 2 * k == n { 1.0 } else { 2.0 };
            s -= bk * math::cos(2.0 * k as f64 * theta) / (4.0 * (k * k) as f64 - 1.0);
        }
        let cj = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = cj * s / nf * 0.5 * (b - a);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_ascending_and_hit_ends() {
        let x = cheb_nodes(-1.0, 3.0, 16);
        assert_eq!(x[0], -1.0);
        assert_eq!(x[16], 3.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!((x[8] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn differentiates_polynomials_exactly() {
        let x = cheb_nodes(0.5, 2.0, 12);
        let v: Vec<f64> = x.iter().map(|t| t.powi(7) - 3.0 * t * t).collect();
        let d = cheb_diff(&v, 0.5, 2.0);
        for (t, dv) in x.iter().zip(&d) {
            let e = 7.0 * t.powi(6) - 6.0 * t;
            assert!((dv - e).abs() < 1e-10 * e.abs().max(1.0), "{t}: {dv} vs {e}");
        }
    }

    #[test]
    fn spectral_accuracy_on_analytic_function() {
        let x = cheb_nodes(0.0, 3.0, 2048);
        let v: Vec<f64> = x.iter().map(|t| (3.0 * t).sin() * (-t * t).exp()).collect();
        let d = cheb_diff(&v, 0.0, 3.0);
        let err = x
            .iter()
            .zip(&d)
            .map(|(t, dv)| {
                let e = (3.0 * (3.0 * t).cos() - 2.0 * t * (3.0 * t).sin()) * (-t * t).exp();
                (dv - e).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn clenshaw_curtis_integrates() {
        let n = 32;
        let x = cheb_nodes(0.0, 2.0, n);
        let w = clenshaw_curtis_weights(0.0, 2.0, n);
        let s: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.exp()).sum();
        assert!((s - (2f64.exp() - 1.0)).abs() < 1e-13);
    }
}
