//! Potential hypotheses (envelope mode) and concrete radial samples.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::math;
use crate::quadrature::{integrate, QuadConfig};

/// Upper limit for β: 2(√3 − 1).
pub const BETA_MAX: f64 = 1.464_101_615_137_754_6;

/// Radial profiles on `[1, ∞)`. Arguments below 1 are clamped to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum RadialFamily {
    /// `(log r + 1)^{-exponent}`
    LogPower { exponent: f64 },
    /// `r^{-exponent}`
    PowerLaw { exponent: f64 },
    One,
    Zero,
}

impl RadialFamily {
    pub fn log_power(exponent: f64) -> Self {
        Self::LogPower { exponent }
    }

    pub fn power_law(exponent: f64) -> Self {
        Self::PowerLaw { exponent }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LogPower { .. } => "log_power",
            Self::PowerLaw { .. } => "power_law",
            Self::One => "one",
            Self::Zero => "zero",
        }
    }

    /// Value at `r` (clamped to `r ≥ 1`).
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_log(if r > 1.0 { math::ln(r) } else { 0.0 })
    }

    /// Value at `r = e^u`, `u ≥ 0`.
    pub fn eval_log(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match *self {
            Self::LogPower { exponent } => math::powf(u + 1.0, -exponent),
            Self::PowerLaw { exponent } => math::exp(-exponent * u),
            Self::One => 1.0,
            Self::Zero => 0.0,
        }
    }

    /// `d/dr` of the profile for `r > 1` (zero below).
    pub fn derivative(&self, r: f64) -> f64 {
        if r <= 1.0 {
            return 0.0;
        }
        let u = math::ln(r);
        match *self {
            Self::LogPower { exponent } => -exponent * math::powf(u + 1.0, -exponent - 1.0) / r,
            Self::PowerLaw { exponent } => -exponent * math::powf(r, -exponent - 1.0),
            Self::One | Self::Zero => 0.0,
        }
    }

    /// `∫_0^u f(e^v) dv`, i.e. `∫_1^{e^u} f(s)/s ds`. Infinite `u` gives the
    /// full integral (possibly `+∞`).
    pub fn log_antiderivative(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::LogPower { exponent: p } => {
                if (p - 1.0).abs() < 1e-14 {
                    math::ln(u + 1.0)
                } else if u.is_infinite() {
                    if p > 1.0 {
                        1.0 / (p - 1.0)
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (1.0 - math::powf(u + 1.0, 1.0 - p)) / (p - 1.0)
                }
            }
            Self::PowerLaw { exponent: q } => {
                if q == 0.0 {
                    u
                } else if u.is_infinite() {
                    if q > 0.0 {
                        1.0 / q
                    } else {
                        f64::INFINITY
                    }
                } else {
                    -libm::expm1(-q * u) / q
                }
            }
            Self::One => u,
            Self::Zero => 0.0,
        }
    }

    /// `∫_{u1}^{u2} f(e^v) dv` for `0 ≤ u1 ≤ u2 ≤ ∞`, without the
    /// cancellation of differencing [`log_antiderivative`](Self::log_antiderivative).
    pub fn log_integral(&self, u1: f64, u2: f64) -> f64 {
        let u1 = u1.max(0.0);
        if u2 <= u1 {
            return 0.0;
        }
        match *self {
            Self::LogPower { exponent: p } => {
                if (p - 1.0).abs() < 1e-14 {
                    if u2.is_infinite() {
                        f64::INFINITY
                    } else {
                        libm::log1p((u2 - u1) / (u1 + 1.0))
                    }
                } else {
                    let a = math::powf(u1 + 1.0, 1.0 - p);
                    let b = if u2.is_infinite() {
                        if p > 1.0 {
                            0.0
                        } else {
                            return f64::INFINITY;
                        }
                    } else {
                        math::powf(u2 + 1.0, 1.0 - p)
                    };
                    (a - b) / (p - 1.0)
                }
            }
            Self::PowerLaw { exponent: q } => {
                if q == 0.0 {
                    u2 - u1
                } else if u2.is_infinite() {
                    if q > 0.0 {
                        math::exp(-q * u1) / q
                    } else {
                        f64::INFINITY
                    }
                } else {
                    -math::exp(-q * u1) * libm::expm1(-q * (u2 - u1)) / q
                }
            }
            Self::One => u2 - u1,
            Self::Zero => 0.0,
        }
    }

    /// Pointwise square as a member of the same family.
    pub fn squared(&self) -> Self {
        match *self {
            Self::LogPower { exponent } => Self::LogPower {
                exponent: 2.0 * exponent,
            },
            Self::PowerLaw { exponent } => Self::PowerLaw {
                exponent: 2.0 * exponent,
            },
            other => other,
        }
    }

    /// `lim_{r→∞} f(r) = 0`.
    pub fn vanishes_at_infinity(&self) -> bool {
        match *self {
            Self::LogPower { exponent } | Self::PowerLaw { exponent } => exponent > 0.0,
            Self::One => false,
            Self::Zero => true,
        }
    }

    /// `r^{-1} f(r) ∈ L¹[1, ∞)`, decided analytically for the built-in families.
    pub fn log_integrable(&self) -> bool {
        match *self {
            Self::LogPower { exponent } => exponent > 1.0,
            Self::PowerLaw { exponent } => exponent > 0.0,
            Self::One => false,
            Self::Zero => true,
        }
    }

    /// Values stay in `[0, 1]` on `[1, ∞)`.
    pub fn in_unit_range(&self) -> bool {
        match *self {
            Self::LogPower { exponent } | Self::PowerLaw { exponent } => exponent >= 0.0,
            Self::One | Self::Zero => true,
        }
    }

    /// Parses a family from its config name and exponent parameter.
    pub fn from_name(name: &str, exponent: Option<f64>) -> Result<Self> {
        let need = |e: Option<f64>| {
            e.ok_or_else(|| Error::Config(format!("family '{name}' needs an exponent")))
        };
        match name {
            "log_power" => Ok(Self::LogPower {
                exponent: need(exponent)?,
            }),
            "power_law" => Ok(Self::PowerLaw {
                exponent: need(exponent)?,
            }),
            "one" => Ok(Self::One),
            "zero" => Ok(Self::Zero),
            other => Err(Error::Config(format!("unknown radial family '{other}'"))),
        }
    }
}

/// Cutoff `χ`: 1 on `[0, lo]`, 0 on `[hi, ∞)`, C^∞ in between.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum ChiFamily {
    SmoothStep { lo: f64, hi: f64 },
}

impl Default for ChiFamily {
    fn default() -> Self {
        Self::SmoothStep { lo: 1.1, hi: 1.9 }
    }
}

fn bump_half(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        math::exp(-1.0 / x)
    }
}

impl ChiFamily {
    pub fn lo(&self) -> f64 {
        match *self {
            Self::SmoothStep { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Self::SmoothStep { hi, .. } => hi,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let (lo, hi) = (self.lo(), self.hi());
        if r <= lo {
            return 1.0;
        }
        if r >= hi {
            return 0.0;
        }
        let x = (r - lo) / (hi - lo);
        let g0 = bump_half(1.0 - x);
        let g1 = bump_half(x);
        g0 / (g0 + g1)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let (lo, hi) = (self.lo(), self.hi());
        if r <= lo || r >= hi {
            return 0.0;
        }
        let x = (r - lo) / (hi - lo);
        let g0 = bump_half(1.0 - x);
        let g1 = bump_half(x);
        // d/dx e^{-1/x} = e^{-1/x}/x².
        let d0 = -g0 / ((1.0 - x) * (1.0 - x));
        let d1 = g1 / (x * x);
        let s = g0 + g1;
        (d0 * s - g0 * (d0 + d1)) / (s * s) / (hi - lo)
    }
}

/// Constants and profile choices of the potential hypothesis class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PotentialParams {
    pub n: u32,
    pub beta: f64,
    pub c0: f64,
    pub delta: f64,
    pub c_s: f64,
    pub rho: f64,
    pub c_l: f64,
    /// Radius beyond which the long-range part is small; derived from the
    /// envelopes when absent.
    pub b: Option<f64>,
    pub p_exponent: f64,
    pub m_l: RadialFamily,
    pub m_s: RadialFamily,
    pub y: RadialFamily,
    pub chi: ChiFamily,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self::with_defaults(3, 1.0, 1.0, 1.0, 1.0, 2.0, 1.0)
    }
}

/// Default `m_S` for a given `δ`: `(log r + 1)^{-1}` at δ = 1, `1` for
/// `0 < δ < 1` and `(log r + 1)^{-ρ}` at δ = 0.
pub fn default_m_s(delta: f64, rho: f64) -> RadialFamily {
    if delta >= 1.0 {
        RadialFamily::log_power(1.0)
    } else if delta > 0.0 {
        RadialFamily::One
    } else {
        RadialFamily::log_power(rho)
    }
}

impl PotentialParams {
    pub fn with_defaults(
        n: u32,
        beta: f64,
        c0: f64,
        delta: f64,
        c_s: f64,
        rho: f64,
        c_l: f64,
    ) -> Self {
        Self {
            n,
            beta,
            c0,
            delta,
            c_s,
            rho,
            c_l,
            b: None,
            p_exponent: 2.0,
            m_l: RadialFamily::log_power(2.0),
            m_s: default_m_s(delta, rho),
            y: RadialFamily::log_power(1.0),
            chi: ChiFamily::default(),
        }
    }

    /// All constants zero: the free operator.
    pub fn free(n: u32, delta: f64) -> Self {
        let mut p = Self::with_defaults(n, 0.0, 0.0, delta, 0.0, 2.0, 0.0);
        p.b = Some(core::f64::consts::E);
        p
    }

    /// `b` as configured, or the smallest `b ≥ e` beyond which
    /// `c_L y ≤ E_min/8` and `(c_L/2) m_L ≤ E_min/8`.
    pub fn resolve_b(&self, e_min: f64) -> Result<f64> {
        if let Some(b) = self.b {
            return Ok(b);
        }
        let floor = core::f64::consts::E;
        let limit = e_min / 8.0;
        let ok = |r: f64| self.c_l * self.y.eval(r) <= limit && 0.5 * self.c_l * self.m_l.eval(r) <= limit;
        if ok(floor) {
            return Ok(floor);
        }
        // Both profiles decrease, so the feasible set is a half line.
        let mut lo = math::ln(floor);
        let mut hi = lo;
        let mut found = false;
        for _ in 0..200 {
            hi = 2.0 * hi + 1.0;
            if ok(math::exp(hi)) {
                found = true;
                break;
            }
            if hi > 700.0 {
                break;
            }
        }
        if !found {
            return Err(Error::Config(format!(
                "no finite b with c_L y, c_L m_L / 2 <= E_min/8 (c_L = {}, E_min = {e_min})",
                self.c_l
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(math::exp(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(math::exp(hi))
    }

    /// `m̃_S` at `r`. Needs `λ` when `0 < δ < 1`.
    pub fn tilde_m_s(&self, r: f64, lambda: Option<f64>) -> Result<f64> {
        self.tilde_m_s_family(lambda).map(|f| f.eval(r))
    }

    /// `m̃_S` as a radial family (`r^{-1/(2λ)}` for `0 < δ < 1`).
    pub fn tilde_m_s_family(&self, lambda: Option<f64>) -> Result<RadialFamily> {
        if self.delta > 0.0 && self.delta < 1.0 {
            let l = lambda.ok_or_else(|| {
                Error::Config("tilde_mS needs λ (derive scales first) for 0 < δ < 1".into())
            })?;
            if l <= 0.0 {
                return Err(domain("λ must be positive"));
            }
            Ok(RadialFamily::power_law(0.5 / l))
        } else {
            Ok(self.m_s)
        }
    }
}

/// Envelope components of the hypothesis class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EnvelopeComponent {
    V0,
    VS,
    VL,
    VLprime,
    ML,
    MS,
    TildeMS,
    Y,
    Chi,
}

impl FromStr for EnvelopeComponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "V0" => Self::V0,
            "VS" => Self::VS,
            "VL" => Self::VL,
            "VLprime" => Self::VLprime,
            "mL" => Self::ML,
            "mS" => Self::MS,
            "tilde_mS" => Self::TildeMS,
            "y" => Self::Y,
            "chi" => Self::Chi,
            other => return Err(Error::Config(format!("unknown envelope component '{other}'"))),
        })
    }
}

/// Evaluates one envelope component at `r > 0`.
///
/// `lambda` is only consulted for `TildeMS` with `0 < δ < 1`.
pub fn eval_envelope(
    params: &PotentialParams,
    component: EnvelopeComponent,
    r: f64,
    lambda: Option<f64>,
) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(format!("envelope evaluated at r = {r}")));
    }
    let ge1 = if r >= 1.0 { 1.0 } else { 0.0 };
    Ok(match component {
        EnvelopeComponent::V0 => {
            if r <= 2.0 {
                params.c0 * math::powf(r, -params.beta)
            } else {
                0.0
            }
        }
        EnvelopeComponent::VS => {
            ge1 * params.c_s * params.m_s.eval(r) * math::powf(r, -1.0 - params.delta)
        }
        EnvelopeComponent::VL => ge1 * params.c_l * params.y.eval(r),
        EnvelopeComponent::VLprime => ge1 * params.c_l * params.m_l.eval(r) / r,
        EnvelopeComponent::ML => params.m_l.eval(r),
        EnvelopeComponent::MS => params.m_s.eval(r),
        EnvelopeComponent::TildeMS => params.tilde_m_s(r, lambda)?,
        EnvelopeComponent::Y => params.y.eval(r),
        EnvelopeComponent::Chi => params.chi.eval(r),
    })
}

/// Validation settings for [`validate_with`].
#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Quadrature horizon for the integrability checks.
    pub horizon: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { horizon: 1e8 }
    }
}

/// Lists every violated hypothesis; empty means the parameters are admissible.
pub fn validate(params: &PotentialParams) -> Vec<String> {
    validate_with(params, &ValidateOptions::default())
}

pub fn validate_with(params: &PotentialParams, opts: &ValidateOptions) -> Vec<String> {
    let mut v = Vec::new();
    if params.n < 2 {
        v.push(format!("dimension n = {} must be >= 2", params.n));
    }
    if !(params.beta >= 0.0) {
        v.push(format!("beta = {} must be >= 0", params.beta));
    } else if params.beta >= BETA_MAX {
        v.push(format!(
            "beta exceeds 2(√3−1)≈1.4641 (beta = {})",
            params.beta
        ));
    }
    for (name, c) in [("c0", params.c0), ("cS", params.c_s), ("cL", params.c_l)] {
        if !(c >= 0.0) || !c.is_finite() {
            v.push(format!("{name} = {c} must be finite and >= 0"));
        }
    }
    if !(params.delta >= 0.0 && params.delta <= 1.0) {
        v.push(format!("delta = {} must lie in [0, 1]", params.delta));
    }
    if !(params.rho > 1.0) {
        v.push(format!("rho = {} must be > 1", params.rho));
    }
    if let Some(b) = params.b {
        if !(b > 2.0) {
            v.push(format!("b = {b} must be > 2"));
        }
    }
    let n_half = params.n as f64 / 2.0;
    if !(params.p_exponent >= 2.0 && params.p_exponent > n_half) {
        v.push(format!(
            "p = {} must satisfy p >= 2 and p > n/2",
            params.p_exponent
        ));
    }

    // m_L: (0, 1]-valued, vanishing, r^{-1} m_L integrable.
    match params.m_l {
        RadialFamily::Zero => v.push("mL must be positive (maps into (0,1])".into()),
        f => {
            if !f.in_unit_range() {
                v.push("mL must map [1,∞) into (0,1]".into());
            }
            if !f.vanishes_at_infinity() {
                v.push("mL must tend to 0 at infinity".into());
            }
            check_log_integrable("mL", f, opts, &mut v);
        }
    }

    // y: [0, 1]-valued with limit 0.
    if !params.y.in_unit_range() {
        v.push("y must map [1,∞) into [0,1]".into());
    }
    if !params.y.vanishes_at_infinity() {
        v.push("y must tend to 0 at infinity".into());
    }

    // m_S by δ case.
    let ms = params.m_s;
    if !ms.in_unit_range() {
        v.push("mS must map [1,∞) into [0,1]".into());
    }
    if params.delta >= 1.0 {
        check_log_integrable("mS^2", ms.squared(), opts, &mut v);
    } else if params.delta > 0.0 {
        if ms != RadialFamily::One {
            v.push("m_S must be ≡ 1 for 0<δ<1".into());
        }
    } else {
        let ok = matches!(ms, RadialFamily::LogPower { exponent } if (exponent - params.rho).abs() <= 1e-12 * params.rho.abs().max(1.0));
        if !ok {
            v.push("m_S must be (log r + 1)^(-rho) for δ=0".into());
        }
    }

    let ChiFamily::SmoothStep { lo, hi } = params.chi;
    if !(lo > 1.0 && hi < 2.0 && lo < hi) {
        v.push(format!(
            "chi must be 1 near [0,1] and 0 near [2,∞): need 1 < lo < hi < 2 (lo = {lo}, hi = {hi})"
        ));
    }
    v
}

fn check_log_integrable(
    name: &str,
    f: RadialFamily,
    opts: &ValidateOptions,
    out: &mut Vec<String>,
) {
    // Numerical integral up to the horizon (u = log r) plus the analytic
    // tail classification of the family.
    let u_max = math::ln(opts.horizon.max(1.0 + 1e-12));
    let numeric = integrate(
        |u| f.eval_log(u),
        0.0,
        u_max,
        &[],
        &QuadConfig::with_tol(1e-12, 1e-10),
    );
    match numeric {
        Ok(r) if r.value.is_finite() => {}
        _ => out.push(format!("r^-1 {name} quadrature failed up to r = {:e}", opts.horizon)),
    }
    if !f.log_integrable() {
        out.push(format!("r^-1 {name} is not integrable on [1,∞) (tail test)"));
    }
}

/// One closed-form radial term of a concrete potential.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Component {
    /// `c χ(r) r^{-β}`
    PowerLawCutoff { c: f64, beta: f64 },
    /// `c (1 + r)^{-γ_L}`
    LongRange { c: f64, gamma_l: f64 },
    /// `± c m_S(r) r^{-1-δ} 1_{r≥1}`, optionally multiplied by the square
    /// wave `sgn sin(ω r)` (no derivative then).
    ShortRange {
        c: f64,
        sign: f64,
        m_s: RadialFamily,
        delta: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        rough: Option<f64>,
    },
}

/// Value/derivative selector for [`RadialPotential::eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    Derivative,
}

impl Component {
    fn value(&self, chi: &ChiFamily, r: f64) -> f64 {
        match *self {
            Self::PowerLawCutoff { c, beta } => c * chi.eval(r) * math::powf(r, -beta),
            Self::LongRange { c, gamma_l } => c * math::powf(1.0 + r, -gamma_l),
            Self::ShortRange {
                c,
                sign,
                m_s,
                delta,
                rough,
            } => {
                if r < 1.0 {
                    return 0.0;
                }
                let mut v = sign * c * m_s.eval(r) * math::powf(r, -1.0 - delta);
                if let Some(w) = rough {
                    if math::sin(w * r) < 0.0 {
                        v = -v;
                    }
                }
                v
            }
        }
    }

    fn derivative(&self, chi: &ChiFamily, r: f64) -> Result<f64> {
        Ok(match *self {
            Self::PowerLawCutoff { c, beta } => {
                c * (chi.derivative(r) * math::powf(r, -beta)
                    - beta * chi.eval(r) * math::powf(r, -beta - 1.0))
            }
            Self::LongRange { c, gamma_l } => -gamma_l * c * math::powf(1.0 + r, -gamma_l - 1.0),
            Self::ShortRange {
                c,
                sign,
                m_s,
                delta,
                rough,
            } => {
                if rough.is_some() {
                    return Err(Error::Unsupported(
                        "derivative of a rough short-range component".into(),
                    ));
                }
                if r < 1.0 {
                    return Ok(0.0);
                }
                sign * c
                    * (m_s.derivative(r) * math::powf(r, -1.0 - delta)
                        - (1.0 + delta) * m_s.eval(r) * math::powf(r, -2.0 - delta))
            }
        })
    }
}

/// Parts of a concrete potential split as in the hypotheses:
/// `V₀ = χV`, `(1 − χ)V = V_L + V_S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub v0: f64,
    pub v_s: f64,
    pub v_l: f64,
    pub v_l_prime: f64,
}

/// A concrete radial potential built from [`Component`]s.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialPotential {
    pub components: Vec<Component>,
    pub chi: ChiFamily,
}

/// Settings for the construction-time domination check.
#[derive(Debug, Clone, Copy)]
pub struct DominationCheck {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub slack: f64,
}

impl Default for DominationCheck {
    fn default() -> Self {
        Self {
            r_min: 1e-6,
            r_max: 1e6,
            points: 10_000,
            slack: 1e-12,
        }
    }
}

impl RadialPotential {
    /// Builds a potential and checks that it lies inside the envelopes of
    /// `params`.
    pub fn new(components: Vec<Component>, params: &PotentialParams) -> Result<Self> {
        let v = Self::unchecked(components, params.chi);
        let bad = v.domination_violations(params, &DominationCheck::default());
        if let Some(first) = bad.first() {
            return Err(Error::Config(format!(
                "concrete potential exceeds its envelope ({} grid points), first: {first}",
                bad.len()
            )));
        }
        Ok(v)
    }

    /// Builds a potential without the envelope check.
    pub fn unchecked(components: Vec<Component>, chi: ChiFamily) -> Self {
        Self { components, chi }
    }

    pub fn zero() -> Self {
        Self::unchecked(Vec::new(), ChiFamily::default())
    }

    /// Total value (or derivative) at `r`.
    pub fn eval(&self, r: f64, order: Order) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain(format!("potential evaluated at r = {r}")));
        }
        let mut acc = 0.0;
        for c in &self.components {
            acc += match order {
                Order::Value => c.value(&self.chi, r),
                Order::Derivative => c.derivative(&self.chi, r)?,
            };
        }
        Ok(acc)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.components.iter().map(|c| c.value(&self.chi, r)).sum()
    }

    pub fn has_derivative(&self) -> bool {
        !self
            .components
            .iter()
            .any(|c| matches!(c, Component::ShortRange { rough: Some(_), .. }))
    }

    /// Splits `V` into `V₀`, `V_S`, `V_L` and `V_L′` at `r`.
    ///
    /// Long-range components form `V_L`; everything else away from the
    /// origin is `V_S`.
    pub fn decompose(&self, r: f64) -> Decomposition {
        let chi = self.chi.eval(r);
        let dchi = self.chi.derivative(r);
        let mut total = 0.0;
        let mut long = 0.0;
        let mut long_d = 0.0;
        for c in &self.components {
            let v = c.value(&self.chi, r);
            total += v;
            if let Component::LongRange { .. } = c {
                long += v;
                // Long-range terms are always differentiable.
                long_d += c.derivative(&self.chi, r).unwrap_or(0.0);
            }
        }
        Decomposition {
            v0: chi * total,
            v_s: (1.0 - chi) * (total - long),
            v_l: (1.0 - chi) * long,
            v_l_prime: (1.0 - chi) * long_d - dchi * long,
        }
    }

    /// Grid points where a part exceeds its envelope.
    pub fn domination_violations(
        &self,
        params: &PotentialParams,
        check: &DominationCheck,
    ) -> Vec<String> {
        let mut out = Vec::new();
        let l0 = math::ln(check.r_min);
        let l1 = math::ln(check.r_max);
        let n = check.points.max(2);
        for i in 0..n {
            let r = math::exp(l0 + (l1 - l0) * i as f64 / (n - 1) as f64);
            let d = self.decompose(r);
            let env = |c| eval_envelope(params, c, r, None).unwrap_or(f64::INFINITY);
            let s = check.slack;
            if d.v0.abs() > env(EnvelopeComponent::V0) + s {
                out.push(format!("|V0|({r:e}) = {:e}", d.v0.abs()));
            }
            if r >= 1.0 {
                if d.v_s.abs() > env(EnvelopeComponent::VS) + s {
                    out.push(format!("|VS|({r:e}) = {:e}", d.v_s.abs()));
                }
                if d.v_l > env(EnvelopeComponent::VL) + s {
                    out.push(format!("VL({r:e}) = {:e}", d.v_l));
                }
                if d.v_l_prime > env(EnvelopeComponent::VLprime) + s {
                    out.push(format!("VL'({r:e}) = {:e}", d.v_l_prime));
                }
            } else if d.v_s.abs() > s || d.v_l.abs() > s {
                out.push(format!("VL/VS nonzero inside r < 1 at {r:e}"));
            }
        }
        out
    }
}

/// Benchmark potential for a given `δ` regime: singular head `0.5 χ r^{-β}`,
/// long-range tail `0.5 c_L (1 + r)^{-2}` and a short-range term matching
/// the `m_S` of the case.
pub fn benchmark_potential(params: &PotentialParams) -> RadialPotential {
    let mut comps = Vec::new();
    if params.c0 > 0.0 {
        comps.push(Component::PowerLawCutoff {
            c: 0.5 * params.c0,
            beta: params.beta,
        });
    }
    if params.c_l > 0.0 {
        comps.push(Component::LongRange {
            c: 0.5 * params.c_l,
            gamma_l: 2.0,
        });
    }
    if params.c_s > 0.0 {
        comps.push(Component::ShortRange {
            c: 0.5 * params.c_s,
            sign: -1.0,
            m_s: params.m_s,
            delta: params.delta,
            rough: None,
        });
    }
    RadialPotential::unchecked(comps, params.chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn envelope_examples() {
        let mut p = PotentialParams::default();
        p.beta = 1.0;
        p.c0 = 1.0;
        assert_relative_eq!(eval_envelope(&p, EnvelopeComponent::V0, 0.5, None).unwrap(), 2.0);
        assert_eq!(eval_envelope(&p, EnvelopeComponent::V0, 3.0, None).unwrap(), 0.0);
        let mut q = PotentialParams::with_defaults(3, 0.0, 1.0, 0.0, 1.0, 2.0, 1.0);
        q.m_s = default_m_s(0.0, 2.0);
        let r = core::f64::consts::E - 1.0;
        let expected = 1.0 / (r.ln() + 1.0).powi(2);
        assert_relative_eq!(
            eval_envelope(&q, EnvelopeComponent::MS, r, None).unwrap(),
            expected,
            max_relative = 1e-15
        );
        assert_relative_eq!(expected, 0.420_931_703_2, max_relative = 1e-9);
    }

    #[test]
    fn envelope_rejects_bad_inputs() {
        let p = PotentialParams::default();
        assert!(matches!(
            eval_envelope(&p, EnvelopeComponent::VS, 0.0, None),
            Err(Error::Domain(_))
        ));
        assert!(matches!("W".parse::<EnvelopeComponent>(), Err(Error::Config(_))));
        let mid = PotentialParams::with_defaults(3, 0.0, 1.0, 0.5, 1.0, 2.0, 1.0);
        assert!(matches!(
            eval_envelope(&mid, EnvelopeComponent::TildeMS, 2.0, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn concrete_examples() {
        let lr = RadialPotential::unchecked(
            alloc::vec![Component::LongRange { c: 1.0, gamma_l: 2.0 }],
            ChiFamily::default(),
        );
        assert_relative_eq!(lr.eval(1.0, Order::Value).unwrap(), 0.25);
        assert_relative_eq!(lr.eval(1.0, Order::Derivative).unwrap(), -0.25);
        let both = RadialPotential::unchecked(
            alloc::vec![
                Component::PowerLawCutoff { c: 1.0, beta: 1.0 },
                Component::LongRange { c: 1.0, gamma_l: 2.0 }
            ],
            ChiFamily::default(),
        );
        // χ(0.5) = 1: 1/0.5 + 1/1.5².
        assert_relative_eq!(
            both.eval(0.5, Order::Value).unwrap(),
            2.0 + 1.0 / 2.25,
            max_relative = 1e-15
        );
    }

    #[test]
    fn rough_component_has_no_derivative() {
        let v = RadialPotential::unchecked(
            alloc::vec![Component::ShortRange {
                c: 1.0,
                sign: 1.0,
                m_s: RadialFamily::One,
                delta: 0.5,
                rough: Some(3.0),
            }],
            ChiFamily::default(),
        );
        assert!(matches!(
            v.eval(2.0, Order::Derivative),
            Err(Error::Unsupported(_))
        ));
        assert!(v.eval(2.0, Order::Value).is_ok());
    }

    #[test]
    fn validate_examples() {
        let mut p = PotentialParams::with_defaults(3, 1.5, 1.0, 1.0, 1.0, 2.0, 1.0);
        let v = validate(&p);
        assert!(v.iter().any(|s| s.contains("beta exceeds 2(√3−1)≈1.4641")), "{v:?}");
        p.beta = 0.0;
        p.m_s = RadialFamily::log_power(1.0);
        assert!(validate(&p).is_empty(), "{:?}", validate(&p));
        let mut mid = PotentialParams::with_defaults(3, 0.0, 1.0, 0.5, 1.0, 2.0, 1.0);
        mid.m_s = RadialFamily::log_power(1.0);
        assert!(validate(&mid).iter().any(|s| s.contains("m_S must be ≡ 1 for 0<δ<1")));
    }

    #[test]
    fn chi_is_a_smooth_cutoff() {
        let chi = ChiFamily::default();
        assert_eq!(chi.eval(1.0), 1.0);
        assert_eq!(chi.eval(1.95), 0.0);
        assert_relative_eq!(chi.eval(1.5), 0.5, epsilon = 1e-15);
        for i in 1..200 {
            let r = 1.1 + 0.8 * i as f64 / 200.0;
            let fd = (chi.eval(r + 1e-6) - chi.eval(r - 1e-6)) / 2e-6;
            assert!((fd - chi.derivative(r)).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn default_b_solves_the_envelope_condition() {
        let p = PotentialParams::default();
        let b = p.resolve_b(1.0).unwrap();
        // y = (log r + 1)^{-1} <= 1/8 first at log r = 7.
        assert_relative_eq!(b, 7.0_f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn log_antiderivatives_match_quadrature() {
        for f in [
            RadialFamily::log_power(1.0),
            RadialFamily::log_power(2.5),
            RadialFamily::power_law(0.3),
            RadialFamily::One,
        ] {
            for &u in &[0.5, 3.0, 40.0] {
                let q = integrate(|v| f.eval_log(v), 0.0, u, &[], &QuadConfig::default()).unwrap();
                assert_relative_eq!(f.log_antiderivative(u), q.value, max_relative = 1e-12);
            }
        }
    }
}
