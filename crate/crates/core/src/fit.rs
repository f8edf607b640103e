//! Least-squares fits of `V(h) ≈ c · h^{-p} · (log h^{-1})^q` in log space.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::math;

/// Which parameters are free.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "snake_case"))]
pub enum FitModel {
    /// `(p, q, c)` together.
    Joint,
    /// `q` fixed, fit `(p, c)`.
    FixedQ { q: f64 },
    /// Fit `(p, c)` at `q = q0`, then refit `(q, c)` at that `p`.
    TwoPass { q0: f64 },
    /// `q = 0`.
    PowerOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fit {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    /// `max |V_fit/V − 1|` over the series.
    pub residual: f64,
}

// Solves the normal equations of y ≈ X β for up to three columns.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = cols.len();
    let mut a = [[0.0f64; 4]; 3];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = cols[i].iter().zip(&cols[j]).map(|(x, z)| x * z).sum();
        }
        a[i][m] = cols[i].iter().zip(y).map(|(x, z)| x * z).sum();
    }
    let scale = (0..m).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    for k in 0..m {
        let piv = (k..m)
            .max_by(|&x, &z| a[x][k].abs().total_cmp(&a[z][k].abs()))
            .unwrap_or(k);
        a.swap(k, piv);
        if a[k][k].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Numeric("singular normal equations in fit".into()));
        }
        for i in (k + 1)..m {
            let f = a[i][k] / a[k][k];
            for j in k..=m {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut x = alloc::vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = a[k][m];
        for j in (k + 1)..m {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Ok(x)
}

/// Fits `series = [(h, V)]` with `h ∈ (0, 1)`, `V > 0`, at least four points.
pub fn fit_report(series: &[(f64, f64)], model: FitModel) -> Result<Fit> {
    if series.len() < 4 {
        return Err(Error::Config(format!(
            "fit needs at least 4 points, got {}",
            series.len()
        )));
    }
    let mut xp = Vec::with_capacity(series.len());
    let mut xq = Vec::with_capacity(series.len());
    let mut y = Vec::with_capacity(series.len());
    for &(h, v) in series {
        if !(h > 0.0 && h < 1.0) || !(v > 0.0) || !v.is_finite() {
            return Err(domain(format!("fit point (h = {h}, V = {v}) outside domain")));
        }
        let l = -math::ln(h);
        xp.push(l);
        xq.push(math::ln(l));
        y.push(math::ln(v));
    }
    let ones = alloc::vec![1.0; series.len()];
    let fit_with_q = |q: f64| -> Result<(f64, f64)> {
        let yy: Vec<f64> = y.iter().zip(&xq).map(|(v, x)| v - q * x).collect();
        let b = least_squares(&[ones.clone(), xp.clone()], &yy)?;
        Ok((b[1], b[0]))
    };
    let (p, q, lc) = match model {
        FitModel::Joint => {
            let b = least_squares(&[ones.clone(), xp.clone(), xq.clone()], &y)?;
            (b[1], b[2], b[0])
        }
        FitModel::FixedQ { q } => {
            let (p, lc) = fit_with_q(q)?;
            (p, q, lc)
        }
        FitModel::PowerOnly => {
            let (p, lc) = fit_with_q(0.0)?;
            (p, 0.0, lc)
        }
        FitModel::TwoPass { q0 } => {
            let (p, _) = fit_with_q(q0)?;
            let yy: Vec<f64> = y.iter().zip(&xp).map(|(v, x)| v - p * x).collect();
            let b = least_squares(&[ones.clone(), xq.clone()], &yy)?;
            (p, b[1], b[0])
        }
    };
    let residual = y
        .iter()
        .zip(xp.iter().zip(&xq))
        .map(|(v, (a, b))| (libm::expm1(lc + p * a + q * b - v)).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        p,
        q,
        c: math::exp(lc),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hs() -> Vec<f64> {
        (0..10).map(|i| 10f64.powf(-2.0 - 4.0 * i as f64 / 9.0)).collect()
    }

    #[test]
    fn exact_series_is_inverted() {
        let s: Vec<_> = hs().iter().map(|&h| (h, h.powi(-2) * (-h.ln()).powi(3))).collect();
        let f = fit_report(&s, FitModel::Joint).unwrap();
        assert_abs_diff_eq!(f.p, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(f.q, 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(f.c, 1.0, epsilon = 1e-6);
        assert!(f.residual < 1e-9);
    }

    #[test]
    fn constant_series() {
        let s: Vec<_> = hs().iter().map(|&h| (h, 5.0)).collect();
        let f = fit_report(&s, FitModel::Joint).unwrap();
        assert_abs_diff_eq!(f.p, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.q, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(f.c, 5.0, epsilon = 1e-7);
    }

    #[test]
    fn synthetic_log_g_two_pass() {
        // log g = h^{-4/3} log(1/h).
        let s: Vec<_> = hs()
            .iter()
            .map(|&h| (h, h.powf(-4.0 / 3.0) * (-h.ln())))
            .collect();
        let f = fit_report(&s, FitModel::TwoPass { q0: 1.0 }).unwrap();
        assert_abs_diff_eq!(f.p, 4.0 / 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(f.q, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn noisy_series_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let s: Vec<_> = hs()
                .iter()
                .map(|&h| {
                    let noise = 1.0 + 1e-3 * (2.0 * rng.random::<f64>() - 1.0);
                    (h, h.powf(-1.5) * noise)
                })
                .collect();
            let f = fit_report(&s, FitModel::PowerOnly).unwrap();
            worst = worst.max((f.p - 1.5).abs());
        }
        assert!(worst < 0.02, "worst deviation {worst}");
    }

    #[test]
    fn errors() {
        assert!(fit_report(&[(0.1, 1.0); 3], FitModel::Joint).unwrap_err().is_config());
        // All points identical: singular.
        let e = fit_report(&[(0.1, 1.0); 5], FitModel::Joint).unwrap_err();
        assert!(matches!(e, Error::Numeric(_)));
        assert!(fit_report(&[(0.1, -1.0); 5], FitModel::PowerOnly).is_err());
    }
}
