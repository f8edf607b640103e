//! Largest eigenvalue of a Hermitian positive semidefinite operator given
//! only through matrix–vector products.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math;

/// Iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct IterConfig {
    /// Relative tolerance on the Ritz residual (Lanczos) or on the change
    /// of the Rayleigh quotient (power iteration).
    pub rel_tol: f64,
    /// Cap on operator applications.
    pub max_iter: usize,
    /// Krylov dimension before a restart (Lanczos only).
    pub krylov_dim: usize,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    /// Restarted Lanczos with full reorthogonalisation.
    Lanczos,
    /// Power iteration with a Rayleigh-quotient stopping test.
    Power,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 10_000,
            krylov_dim: 60,
            method: Method::Lanczos,
        }
    }
}

/// Outcome of an eigenvalue iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final residual bound relative to `value`.
    pub residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    math::sqrt(a.iter().map(|x| x.norm_sqr()).sum())
}

fn scale(a: &mut [Complex64], s: f64) {
    for x in a {
        *x *= s;
    }
}

/// Deterministic start vector with no special structure.
pub fn start_vector(n: usize) -> Vec<Complex64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(0.5 + next(), next() - 0.5))
        .collect();
    let nv = norm(&v);
    scale(&mut v, 1.0 / nv);
    v
}

/// Largest eigenvalue of `op` (Hermitian PSD) of dimension `n`.
pub fn largest_eigenvalue<F>(n: usize, op: F, cfg: &IterConfig) -> EigEstimate
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    match cfg.method {
        Method::Lanczos => lanczos(n, op, cfg),
        Method::Power => power(n, op, cfg),
    }
}

fn power<F>(n: usize, mut op: F, cfg: &IterConfig) -> EigEstimate
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let mut x = start_vector(n);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let mut prev = 0.0;
    for it in 1..=cfg.max_iter {
        op(&x, &mut y);
        let rq = dot(&x, &y).re;
        let ny = norm(&y);
        if ny == 0.0 {
            return EigEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
                residual: 0.0,
            };
        }
        let change = (rq - prev).abs() / rq.abs().max(f64::MIN_POSITIVE);
        prev = rq;
        x.copy_from_slice(&y);
        scale(&mut x, 1.0 / ny);
        if it > 2 && change < cfg.rel_tol {
            return EigEstimate {
                value: rq,
                iterations: it,
                converged: true,
                residual: change,
            };
        }
    }
    EigEstimate {
        value: prev,
        iterations: cfg.max_iter,
        converged: false,
        residual: f64::NAN,
    }
}

/// Eigenvalues of the symmetric tridiagonal `(alpha, beta)` below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        q = alpha[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiag_max_eig(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(alpha, beta, mid) >= m {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

// Eigenvector of the tridiagonal for eigenvalue theta by inverse iteration.
fn tridiag_eigvec(alpha: &[f64], beta: &[f64], theta: f64) -> Vec<f64> {
    let m = alpha.len();
    if m == 1 {
        return vec![1.0];
    }
    let shift = theta + 1e-14 * theta.abs().max(1e-300);
    let z = |x: f64| Complex64::new(x, 0.0);
    let sub: Vec<Complex64> = beta[..m - 1].iter().map(|&b| z(b)).collect();
    let diag: Vec<Complex64> = alpha.iter().map(|&a| z(a - shift)).collect();
    let mut y: Vec<Complex64> = (0..m).map(|i| z(1.0 + 0.01 * i as f64)).collect();
    if let Ok(lu) = super::tridiag::TridiagLu::factor(&sub, &diag, &sub) {
        for _ in 0..3 {
            lu.solve(&mut y);
            let ny = norm(&y);
            if !(ny > 0.0 && ny.is_finite()) {
                break;
            }
            scale(&mut y, 1.0 / ny);
        }
    }
    y.iter().map(|c| c.re).collect()
}

fn lanczos<F>(n: usize, mut op: F, cfg: &IterConfig) -> EigEstimate
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let kdim = cfg.krylov_dim.max(2).min(n.max(1));
    let mut x = start_vector(n);
    let mut applications = 0;
    let mut best = 0.0;
    let mut best_res = f64::INFINITY;
    while applications < cfg.max_iter {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(kdim);
        let mut alpha: Vec<f64> = Vec::with_capacity(kdim);
        let mut beta: Vec<f64> = Vec::with_capacity(kdim);
        basis.push(x.clone());
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        let mut last_beta;
        loop {
            let j = basis.len() - 1;
            op(&basis[j], &mut w);
            applications += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // Full reorthogonalisation, twice.
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            last_beta = norm(&w);
            let theta = tridiag_max_eig(&alpha, &beta);
            let y = tridiag_eigvec(&alpha, &beta, theta);
            let res = last_beta * y[y.len() - 1].abs() / theta.abs().max(f64::MIN_POSITIVE);
            best = theta;
            best_res = res;
            let exhausted = last_beta <= 1e-14 * theta.abs().max(f64::MIN_POSITIVE);
            if res < cfg.rel_tol || exhausted || basis.len() == n {
                return EigEstimate {
                    value: theta,
                    iterations: applications,
                    converged: true,
                    residual: if exhausted { 0.0 } else { res },
                };
            }
            if basis.len() >= kdim || applications >= cfg.max_iter {
                // Restart from the Ritz vector.
                let mut r = vec![Complex64::new(0.0, 0.0); n];
                for (v, &c) in basis.iter().zip(&y) {
                    for (ri, vi) in r.iter_mut().zip(v) {
                        *ri += vi * c;
                    }
                }
                let nr = norm(&r);
                scale(&mut r, 1.0 / nr);
                x = r;
                break;
            }
            beta.push(last_beta);
            let mut next = w.clone();
            scale(&mut next, 1.0 / last_beta);
            basis.push(next);
        }
    }
    EigEstimate {
        value: best,
        iterations: applications,
        converged: false,
        residual: best_res,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: &[f64]) -> impl FnMut(&[Complex64], &mut [Complex64]) + '_ {
        move |x, y| {
            for i in 0..d.len() {
                y[i] = x[i] * d[i];
            }
        }
    }

    #[test]
    fn diagonal_operator_both_methods() {
        let mut d: Vec<f64> = (0..300).map(|i| 1.0 + (i as f64 * 0.37).sin().abs()).collect();
        d[123] = 2.5;
        let exact = d.iter().copied().fold(0.0, f64::max);
        for method in [Method::Lanczos, Method::Power] {
            let cfg = IterConfig {
                method,
                ..IterConfig::default()
            };
            let e = largest_eigenvalue(d.len(), diag_op(&d), &cfg);
            assert!(e.converged, "{method:?}");
            assert!((e.value - exact).abs() < 1e-6 * exact, "{method:?}: {} vs {exact}", e.value);
        }
    }

    #[test]
    fn lanczos_resolves_clustered_top() {
        let mut d: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        d[17] = 2.0;
        d[400] = 2.0 - 1e-7;
        let e = largest_eigenvalue(d.len(), diag_op(&d), &IterConfig::default());
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sturm_bisection() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        assert!((tridiag_max_eig(&[2.0, 2.0], &[1.0]) - 3.0).abs() < 1e-13);
        let v = tridiag_eigvec(&[2.0, 2.0], &[1.0], 3.0);
        assert!((v[0] - v[1]).abs() < 1e-8);
    }
}
