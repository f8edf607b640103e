//! Complex tridiagonal LU with partial pivoting.
//!
//! Same factorisation and storage as LAPACK's `zgttrf`: unit lower factor
//! multipliers in `dl`, upper factor in `d`, `du`, `du2`, row swaps in
//! `ipiv`. Solves with `A` and with `Aᴴ` reuse the factors.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Factors of a tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    // true where rows i and i+1 were swapped at step i.
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// Factors the matrix with subdiagonal `sub`, diagonal `diag` and
    /// superdiagonal `sup` (`sub.len() == sup.len() == diag.len() − 1`).
    pub fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::Config("tridiagonal bands have inconsistent lengths".into()));
        }
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].l1_norm() >= dl[i].l1_norm() {
                if d[i].l1_norm() == 0.0 {
                    return Err(Error::Lu { row: i });
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for (i, v) in d.iter().enumerate() {
            if v.l1_norm() == 0.0 || !v.is_finite() {
                return Err(Error::Lu { row: i });
            }
        }
        Ok(Self {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        debug_assert_eq!(b.len(), n);
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                let t = self.dl[i] * b[i];
                b[i + 1] -= t;
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// Overwrites `b` with `A⁻ᴴ b`.
    pub fn solve_adjoint(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        debug_assert_eq!(b.len(), n);
        b[0] /= self.d[0].conj();
        if n > 1 {
            b[1] = (b[1] - self.du[0].conj() * b[0]) / self.d[1].conj();
        }
        for i in 2..n {
            b[i] = (b[i] - self.du[i - 1].conj() * b[i - 1] - self.du2[i - 2].conj() * b[i - 2])
                / self.d[i].conj();
        }
        for i in (0..n.saturating_sub(1)).rev() {
            if self.swapped[i] {
                let temp = b[i + 1];
                b[i + 1] = b[i] - self.dl[i].conj() * temp;
                b[i] = temp;
            } else {
                let t = self.dl[i].conj() * b[i + 1];
                b[i] -= t;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }

    #[test]
    fn matches_dense_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[1usize, 2, 3, 7, 40] {
            // Small diagonal forces pivoting.
            let diag: Vec<_> = (0..n).map(|_| c(&mut rng) * 0.1).collect();
            let sub: Vec<_> = (1..n).map(|_| c(&mut rng)).collect();
            let sup: Vec<_> = (1..n).map(|_| c(&mut rng)).collect();
            let lu = TridiagLu::factor(&sub, &diag, &sup).unwrap();
            let mut a = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                a[(i, i)] = diag[i];
                if i + 1 < n {
                    a[(i + 1, i)] = sub[i];
                    a[(i, i + 1)] = sup[i];
                }
            }
            let b: Vec<_> = (0..n).map(|_| c(&mut rng)).collect();
            let bv = nalgebra::DVector::from_vec(b.clone());
            let x = a.clone().lu().solve(&bv).unwrap();
            let xh = a.adjoint().lu().solve(&bv).unwrap();
            let mut y = b.clone();
            lu.solve(&mut y);
            let mut yh = b.clone();
            lu.solve_adjoint(&mut yh);
            for i in 0..n {
                assert!((y[i] - x[i]).norm() < 1e-10 * x.norm(), "n={n}");
                assert!((yh[i] - xh[i]).norm() < 1e-10 * xh.norm(), "n={n} adjoint");
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let z = Complex64::new(0.0, 0.0);
        let e = TridiagLu::factor(&[z], &[z, z], &[z]).unwrap_err();
        assert!(matches!(e, Error::Lu { .. }));
    }
}
