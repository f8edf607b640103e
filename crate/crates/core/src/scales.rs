//! The `h`-dependent scale system and the fixed construction constants.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::math;
use crate::potential::BETA_MAX;

/// Fixed constants of the weight/phase construction.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstructionParams {
    pub sigma: f64,
    pub rho_tilde: f64,
    pub gamma: f64,
    pub tau: f64,
    pub kappa: f64,
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub big_t: f64,
    pub t: f64,
    pub eps_exponent: f64,
    #[cfg_attr(feature = "serde", serde(rename = "E_min"))]
    pub e_min: f64,
    #[cfg_attr(feature = "serde", serde(rename = "E_max"))]
    pub e_max: f64,
}

/// Scales derived from `h` for one `δ` regime.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HScales {
    pub h: f64,
    pub delta: f64,
    pub lambda: f64,
    pub eta: f64,
    pub k: f64,
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub m: f64,
    pub a: f64,
    pub eps1: f64,
}

impl HScales {
    /// `log(h^{-1})`.
    pub fn log_inv_h(&self) -> f64 {
        -math::ln(self.h)
    }

    /// `log a = M log(h^{-1})`, safe when `a` itself overflows.
    pub fn log_a(&self) -> f64 {
        self.m * self.log_inv_h()
    }
}

/// Regime of the short-range decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaCase {
    Zero,
    Between,
    One,
}

impl DeltaCase {
    pub fn of(delta: f64) -> Self {
        if delta <= 0.0 {
            Self::Zero
        } else if delta >= 1.0 {
            Self::One
        } else {
            Self::Between
        }
    }
}

/// `k` as a function of `δ` and `λ`.
pub fn k_of(delta: f64, lambda: f64) -> f64 {
    match DeltaCase::of(delta) {
        DeltaCase::One => 1.0,
        DeltaCase::Zero => 1.0 / 3.0,
        DeltaCase::Between => (1.0 + 2.0 * delta - 1.0 / lambda) / 3.0,
    }
}

/// Builds the scales for `h`. Fails for `h ≥ e^{-1}` where `λ ≤ 0`.
pub fn derive_scales(h: f64, delta: f64, cp: &ConstructionParams) -> Result<HScales> {
    if !(h > 0.0 && h < 1.0) {
        return Err(domain(format!("h = {h} must lie in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(domain(format!("delta = {delta} must lie in [0, 1]")));
    }
    let log_inv_h = -math::ln(h);
    if log_inv_h <= 1.0 {
        return Err(Error::InadmissibleH {
            h,
            reason: "log(1/h) <= 1, so λ = log log(1/h) <= 0".into(),
        });
    }
    let lambda = math::ln(log_inv_h);
    let eta = 1.0 / log_inv_h;
    let k = k_of(delta, lambda);
    let m = match DeltaCase::of(delta) {
        DeltaCase::Zero => 1.0 + cp.big_t * eta * lambda + cp.t * eta,
        _ => cp.sigma / k + cp.big_t * eta * lambda,
    };
    // a = h^{-M} = exp(M log(1/h)); may overflow to +∞ for tiny h, in which
    // case callers use `log_a`.
    let a = math::exp(m * log_inv_h);
    Ok(HScales {
        h,
        delta,
        lambda,
        eta,
        k,
        m,
        a,
        eps1: cp.eps_exponent / 7.0,
    })
}

/// Outcome of [`check_admissible`].
#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Checks `ηλ ∈ (0,1]`, `k ∈ [1/3, 1]` and the case-dependent bound on `η`.
pub fn check_admissible(h: f64, delta: f64) -> Admissibility {
    let mut failures = Vec::new();
    if !(h > 0.0 && h < 1.0) {
        failures.push(format!("h = {h} outside (0, 1)"));
        return Admissibility { ok: false, failures };
    }
    let log_inv_h = -math::ln(h);
    if log_inv_h <= 1.0 {
        failures.push(format!(
            "λ = log(log(1/h)) = {:.6} is not positive",
            math::ln(log_inv_h)
        ));
        return Admissibility { ok: false, failures };
    }
    let lambda = math::ln(log_inv_h);
    let eta = 1.0 / log_inv_h;
    let el = eta * lambda;
    if !(el > 0.0 && el <= 1.0) {
        failures.push(format!("ηλ = {el:.6} not in (0, 1]"));
    }
    let k = k_of(delta, lambda);
    if !(k >= 1.0 / 3.0 - 1e-15 && k <= 1.0 + 1e-15) {
        failures.push(format!("k = {k:.6} not in [1/3, 1]"));
    }
    match DeltaCase::of(delta) {
        DeltaCase::Zero => {
            if eta > 1.0 {
                failures.push(format!("η = {eta:.6} > 1"));
            }
        }
        _ => {
            let bound = delta.min(1.0 / 3.0);
            if eta > bound {
                failures.push(format!("η = {eta:.6} > min(δ, 1/3) = {bound:.6}"));
            }
        }
    }
    Admissibility {
        ok: failures.is_empty(),
        failures,
    }
}

/// Largest admissible `h` for a given `δ` (up to a relative margin of 1e-12).
pub fn max_admissible_h(delta: f64) -> f64 {
    // Every condition is monotone in h: smaller h is always admissible once
    // a larger one is. Bisect on log(1/h).
    let ok = |l: f64| check_admissible(math::exp(-l), delta).ok;
    let mut hi = 1.0 + 1e-9;
    let mut lo_ok = hi;
    while !ok(lo_ok) {
        lo_ok *= 2.0;
        if lo_ok > 1e6 {
            return 0.0;
        }
    }
    if ok(hi) {
        return math::exp(-hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (hi + lo_ok);
        if ok(mid) {
            lo_ok = mid;
        } else {
            hi = mid;
        }
    }
    math::exp(-lo_ok)
}

/// `(8 − 4β − β²)/β²`; `+∞` at `β = 0`.
pub fn gamma_max(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain(format!("beta = {beta} must be >= 0")));
    }
    if beta == 0.0 {
        return Ok(f64::INFINITY);
    }
    let g = (8.0 - 4.0 * beta - beta * beta) / (beta * beta);
    if beta >= BETA_MAX || g <= 8.0 * f64::EPSILON {
        return Err(domain(format!(
            "beta = {beta} >= 2(√3−1): no admissible gamma"
        )));
    }
    Ok(g)
}

/// `κ` for `0 < δ < 1`: the largest `κ ≤ 1/8` with
/// `k_∞ κ/(1 − κ) ≤ ε₁`, `k_∞ = (1 + 2δ)/3`.
///
/// The `L¹` norm of `s^{-2}Φ₁` grows like `κλ/(1 − κ)` at worst, so this
/// keeps `e^{k‖s^{-2}Φ₁‖}` below a constant times `(log h^{-1})^{ε₁}`.
pub fn kappa_between(delta: f64, eps1: f64) -> f64 {
    let k_inf = (1.0 + 2.0 * delta) / 3.0;
    (eps1 / (k_inf + eps1)).min(0.125)
}

/// Case-dependent defaults: `T`, `κ`, `γ`; `τ = t = 1` pending calibration.
pub fn default_construction(
    delta: f64,
    beta: f64,
    rho: f64,
    eps_exponent: f64,
) -> Result<ConstructionParams> {
    if !(beta >= 0.0 && beta < BETA_MAX) {
        return Err(domain(format!(
            "beta = {beta} outside [0, 2(√3−1))"
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(domain(format!("delta = {delta} must lie in [0, 1]")));
    }
    if !(eps_exponent > 0.0 && eps_exponent < 1.0) {
        return Err(domain(format!("eps_exponent = {eps_exponent} must lie in (0, 1)")));
    }
    if !(rho > 1.0) {
        return Err(domain(format!("rho = {rho} must be > 1")));
    }
    let eps1 = eps_exponent / 7.0;
    let rho_tilde = rho;
    let (big_t, kappa) = match DeltaCase::of(delta) {
        DeltaCase::Zero => (1.5 * rho_tilde, 0.125),
        DeltaCase::One => (9.0 * eps1, 0.125),
        DeltaCase::Between => (9.0 * eps1, kappa_between(delta, eps1)),
    };
    let gmax = gamma_max(beta)?;
    let gamma = (0.5 * gmax).min(1.0);
    Ok(ConstructionParams {
        sigma: 1.0 / 3.0,
        rho_tilde,
        gamma,
        tau: 1.0,
        kappa,
        big_t,
        t: 1.0,
        eps_exponent,
        e_min: 1.0,
        e_max: 1.0,
    })
}

impl ConstructionParams {
    /// Checks the construction invariants against `β` and `ρ`.
    pub fn check(&self, beta: f64, rho: f64) -> Result<()> {
        if (self.sigma - 1.0 / 3.0).abs() > 1e-15 {
            return Err(Error::Config(format!("sigma = {} must be 1/3", self.sigma)));
        }
        if !(self.rho_tilde > 1.0 && self.rho_tilde <= rho) {
            return Err(Error::Config(format!(
                "rho_tilde = {} must lie in (1, rho = {rho}]",
                self.rho_tilde
            )));
        }
        let gmax = gamma_max(beta)?;
        if !(self.gamma > 0.0 && self.gamma < gmax) {
            return Err(Error::Config(format!(
                "gamma = {} must lie in (0, {gmax})",
                self.gamma
            )));
        }
        if !(self.tau >= 1.0) {
            return Err(Error::Config(format!("tau = {} must be >= 1", self.tau)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 0.125) {
            return Err(Error::Config(format!("kappa = {} must lie in (0, 1/8]", self.kappa)));
        }
        if !(self.big_t > 0.0) {
            return Err(Error::Config(format!("T = {} must be > 0", self.big_t)));
        }
        if !(self.t >= 1.0) {
            return Err(Error::Config(format!("t = {} must be >= 1", self.t)));
        }
        if !(self.eps_exponent > 0.0 && self.eps_exponent < 1.0) {
            return Err(Error::Config(format!(
                "eps_exponent = {} must lie in (0, 1)",
                self.eps_exponent
            )));
        }
        if !(self.e_min > 0.0 && self.e_min <= self.e_max) {
            return Err(Error::Config(format!(
                "need 0 < E_min <= E_max (got {}, {})",
                self.e_min, self.e_max
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cp(delta: f64) -> ConstructionParams {
        default_construction(delta, 1.0, 1.5, 0.7).unwrap()
    }

    #[test]
    fn derive_scales_example() {
        let e2 = core::f64::consts::E.powi(2);
        let s = derive_scales((-e2).exp(), 0.5, &cp(0.5)).unwrap();
        assert_relative_eq!(s.lambda, 2.0, max_relative = 1e-14);
        assert_relative_eq!(s.eta, (-2.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(s.k, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn delta_zero_a_closed_form() {
        let c = cp(0.0);
        for &h in &[1e-3, 1e-8, 1e-20] {
            let s = derive_scales(h, 0.0, &c).unwrap();
            assert_eq!(s.k, 1.0 / 3.0);
            let l: f64 = -(h as f64).ln();
            let expect = c.t.exp() / h * l.powf(c.big_t);
            assert_relative_eq!(s.a, expect, max_relative = 1e-11);
        }
        assert_eq!(derive_scales(1e-4, 1.0, &cp(1.0)).unwrap().k, 1.0);
    }

    #[test]
    fn inadmissible_h_errors() {
        assert!(matches!(
            derive_scales(0.5, 1.0, &cp(1.0)),
            Err(Error::InadmissibleH { .. })
        ));
        assert!(matches!(derive_scales(1.5, 1.0, &cp(1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn admissibility_examples() {
        assert!(!check_admissible(0.5, 1.0).ok);
        let a = check_admissible(1e-6, 0.5);
        assert!(a.ok, "{:?}", a.failures);
        let b = check_admissible((-3.0f64).exp(), 0.01);
        assert!(!b.ok);
        assert!(b.failures.iter().any(|f| f.contains("min(δ, 1/3)")));
    }

    #[test]
    fn admissibility_example_values() {
        let l = -(1e-6f64).ln();
        assert_relative_eq!(1.0 / l, 0.0724, epsilon = 5e-5);
        assert_relative_eq!(l.ln() / l, 0.190, epsilon = 5e-4);
    }

    #[test]
    fn default_construction_examples() {
        let z = default_construction(0.0, 1.0, 1.5, 0.7).unwrap();
        assert_relative_eq!(z.big_t, 2.25);
        let m = default_construction(0.5, 1.0, 2.0, 0.7).unwrap();
        assert_relative_eq!(m.eps_exponent / 7.0, 0.1, max_relative = 1e-15);
        assert_relative_eq!(m.big_t, 0.9, max_relative = 1e-15);
        let f = default_construction(1.0, 0.0, 2.0, 0.7).unwrap();
        assert_eq!(f.gamma, 1.0);
        assert_eq!(f.kappa, 0.125);
        assert!(default_construction(1.0, 1.5, 2.0, 0.7).is_err());
    }

    #[test]
    fn gamma_max_examples() {
        assert_relative_eq!(gamma_max(1.0).unwrap(), 3.0);
        assert_relative_eq!(gamma_max(0.5).unwrap(), 23.0);
        assert!(gamma_max(0.0).unwrap().is_infinite());
        assert!(gamma_max(2.0 * (3.0f64.sqrt() - 1.0)).is_err());
    }

    #[test]
    fn max_admissible_h_is_sharp() {
        let h1 = max_admissible_h(1.0);
        assert_relative_eq!(h1, (-3.0f64).exp(), max_relative = 1e-9);
        assert!(check_admissible(h1, 1.0).ok);
        assert!(!check_admissible(h1 * 1.001, 1.0).ok);
        let h0 = max_admissible_h(0.0);
        assert!(check_admissible(h0, 0.0).ok);
        assert!(h0 > 0.36 && h0 < (-1.0f64).exp());
    }
}
