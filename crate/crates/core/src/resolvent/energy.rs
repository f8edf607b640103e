//! Pointwise check of the derivative identity for `wF` on single-mode test
//! functions.
//!
//! For `u` in one angular sector with eigenvalue `ν`,
//!
//! ```text
//! F = |hu′|² − (h²ν/r² + V_L − φ′² − E)|u|²
//! (wF)′ = −2w Re(P u · ū′) ∓ 2εw Im(u ū′) + w q h²ν/r² |u|²
//!         + (4h⁻¹wφ′ + w′)|hu′|² + (w′(E + φ′² − V_L) + w(2φ′φ″ − V_L′))|u|²
//!         + 2w Re((V₀ + V_S + hφ″) u ū′)
//! ```
//!
//! with `P u = −h²u″ + 2hφ′u′ + (h²ν/r² + V − φ′² + hφ″ − E ± iε)u`.
//! The left side is obtained by Chebyshev differentiation of `wF`, piecewise
//! between the kinks of the weight and phase.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::Sign;
use crate::error::{domain, Result};
use crate::math;
use crate::potential::RadialPotential;
use crate::spectral::{cheb_diff, cheb_nodes};
use crate::weight::WeightPhase;

/// Weight `w` and phase `φ` as seen by the identity.
pub trait WeightProfile {
    fn w(&self, r: f64) -> f64;
    fn w_prime(&self, r: f64) -> f64;
    fn phi_prime(&self, r: f64) -> f64;
    fn phi_second(&self, r: f64) -> f64;
    /// Points where `w′`, `φ″` or the potential split may jump.
    fn kinks(&self) -> Vec<f64>;
}

/// `w = r²`, `φ = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plain;

impl WeightProfile for Plain {
    fn w(&self, r: f64) -> f64 {
        r * r
    }
    fn w_prime(&self, r: f64) -> f64 {
        2.0 * r
    }
    fn phi_prime(&self, _r: f64) -> f64 {
        0.0
    }
    fn phi_second(&self, _r: f64) -> f64 {
        0.0
    }
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl WeightProfile for WeightPhase {
    fn w(&self, r: f64) -> f64 {
        math::exp(self.ln_w(r))
    }
    fn w_prime(&self, r: f64) -> f64 {
        math::exp(self.ln_w_prime(r))
    }
    fn phi_prime(&self, r: f64) -> f64 {
        WeightPhase::phi_prime(self, r)
    }
    fn phi_second(&self, r: f64) -> f64 {
        self.big_phi(r) * WeightPhase::phi_prime(self, r)
    }
    fn kinks(&self) -> Vec<f64> {
        let mut k = self.kinks().to_vec();
        k.push(self.params.chi.lo());
        k.push(self.params.chi.hi());
        k
    }
}

/// Amplitude `A(r)` of a test function `A(r) e^{ikr}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Envelope {
    /// `r^p e^{−(r/s)²}`, `p ≥ 2`.
    PolyGauss { p: u32, s: f64 },
    /// `e^{−((r−c)/s)²}`.
    Gauss { c: f64, s: f64 },
    /// `exp(−1/(1 − x²))`, `x = (r − c)/width`, zero for `|x| ≥ 1`.
    Bump { c: f64, width: f64 },
}

/// `A(r) e^{ikr}` with `A` an [`Envelope`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFunction {
    pub envelope: Envelope,
    pub k: f64,
}

/// `(u, u′, u″)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub u: Complex64,
    pub du: Complex64,
    pub d2u: Complex64,
}

impl Envelope {
    /// `(A, A′, A″)`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Envelope::PolyGauss { p, s } => {
                let g = math::exp(-(r / s) * (r / s));
                let p = p as i32;
                let pf = p as f64;
                let s2 = s * s;
                let a = math::powi(r, p) * g;
                let da = g * (pf * math::powi(r, p - 1) - 2.0 * math::powi(r, p + 1) / s2);
                let d2a = g
                    * (pf * (pf - 1.0) * math::powi(r, p - 2) - (4.0 * pf + 2.0) * math::powi(r, p) / s2
                        + 4.0 * math::powi(r, p + 2) / (s2 * s2));
                (a, da, d2a)
            }
            Envelope::Gauss { c, s } => {
                let x = (r - c) / s;
                let g = math::exp(-x * x);
                let d = -2.0 * x / s;
                (g, g * d, g * (d * d - 2.0 / (s * s)))
            }
            Envelope::Bump { c, width } => {
                let x = (r - c) / width;
                let m = 1.0 - x * x;
                if m <= 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let a = math::exp(-1.0 / m);
                let g1 = -2.0 * x / (m * m * width);
                let g2 = -2.0 * (1.0 + 3.0 * x * x) / (m * m * m * width * width);
                (a, a * g1, a * (g1 * g1 + g2))
            }
        }
    }

    /// `(log A, A′/A, A″/A)`; `log A = −∞` off the support of a bump.
    pub fn log_derivs(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Envelope::PolyGauss { p, s } => {
                let pf = p as f64;
                let d = pf / r - 2.0 * r / (s * s);
                (pf * math::ln(r) - (r / s) * (r / s), d, d * d - pf / (r * r) - 2.0 / (s * s))
            }
            Envelope::Gauss { c, s } => {
                let x = (r - c) / s;
                let d = -2.0 * x / s;
                (-x * x, d, d * d - 2.0 / (s * s))
            }
            Envelope::Bump { c, width } => {
                let x = (r - c) / width;
                let m = 1.0 - x * x;
                if m <= 0.0 {
                    return (f64::NEG_INFINITY, 0.0, 0.0);
                }
                let g1 = -2.0 * x / (m * m * width);
                let g2 = -2.0 * (1.0 + 3.0 * x * x) / (m * m * m * width * width);
                (-1.0 / m, g1, g1 * g1 + g2)
            }
        }
    }

    /// Interval outside which `A` is negligible (exactly zero for bumps).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            // Starting just off the origin keeps every term finite there.
            Envelope::PolyGauss { s, .. } => (1e-14 * s, 7.0 * s),
            Envelope::Gauss { c, s } => (c - 7.0 * s, c + 7.0 * s),
            Envelope::Bump { c, width } => (c - width, c + width),
        }
    }
}

impl TestFunction {
    pub fn new(envelope: Envelope, k: f64) -> Self {
        Self { envelope, k }
    }

    pub fn jet(&self, r: f64) -> Jet {
        let (a, da, d2a) = self.envelope.eval(r);
        let k = self.k;
        let e = Complex64::from_polar(1.0, k * r);
        let i = Complex64::i();
        Jet {
            u: e * a,
            du: e * (da + i * k * a),
            d2u: e * (Complex64::new(d2a - k * k * a, 0.0) + i * (2.0 * k * da)),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.envelope.support()
    }

    /// Checks that `u` sits inside `(0, ∞)` with negligible boundary values.
    pub fn check_support(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.support();
        if !(lo >= 0.0 && hi > lo) || !hi.is_finite() {
            return Err(domain("test function support must lie in [0, ∞)"));
        }
        let peak = sample_peak(self, lo, hi);
        for r in [lo, hi] {
            let j = self.jet(r);
            if j.u.norm() > 1e-12 * peak || j.du.norm() > 1e-12 * peak {
                return Err(domain(alloc::format!(
                    "test function not compactly supported: |u|, |u'| at r = {r} are {:e}, {:e}",
                    j.u.norm(),
                    j.du.norm()
                )));
            }
        }
        Ok((lo, hi))
    }
}

fn sample_peak(f: &TestFunction, lo: f64, hi: f64) -> f64 {
    (0..=512)
        .map(|i| f.jet(lo + (hi - lo) * i as f64 / 512.0).u.norm())
        .fold(0.0, f64::max)
}

/// Twelve fixed test functions placed around the kinks `1`, `b` and `a`.
///
/// `k_e` is the oscillation used for the quasimode-like members; `√E/h` makes
/// them approximately outgoing for the free operator.
pub fn canonical_family(b: f64, a: f64, k_e: f64) -> Vec<TestFunction> {
    use Envelope::*;
    let t = TestFunction::new;
    vec![
        t(PolyGauss { p: 2, s: 1.0 }, 0.0),
        t(PolyGauss { p: 3, s: 0.7 }, k_e),
        t(Bump { c: 0.6, width: 0.35 }, 0.0),
        t(Bump { c: 1.0, width: 0.5 }, 0.0),
        t(Bump { c: 1.0, width: 0.5 }, k_e),
        t(Gauss { c: 2.0, s: 0.25 }, 2.0),
        t(Bump { c: b, width: 0.5 * b }, 0.0),
        t(Bump { c: b, width: 0.5 * b }, k_e),
        t(Bump { c: a, width: 0.5 * a }, 0.0),
        t(Bump { c: a, width: 0.5 * a }, 0.5 * k_e),
        t(Gauss { c: 0.5 * (1.0 + a), s: 0.05 * (1.0 + a) }, k_e),
        t(Bump { c: 2.0 * a, width: 1.9 * a }, k_e),
    ]
}

/// Sector data for the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SectorSpec {
    pub h: f64,
    pub nu: f64,
    pub energy: f64,
    pub epsilon: f64,
    pub sign: Sign,
}

/// Samples of one check.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyCheckState {
    pub r: Vec<f64>,
    pub u: Vec<Complex64>,
    pub du: Vec<Complex64>,
    pub f: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `|lhs − rhs| / max|lhs|` at each node.
    pub residual: Vec<f64>,
    pub max_residual: f64,
    /// Largest `|∓2εw Im(u ū′)|` seen.
    pub max_eps_term: f64,
}

struct Terms {
    wf: f64,
    rhs: f64,
    eps_term: f64,
    f: f64,
}

fn terms<W: WeightProfile>(wp: &W, spec: &SectorSpec, v: &RadialPotential, r: f64, j: &Jet) -> Terms {
    let h = spec.h;
    let w = wp.w(r);
    let dw = wp.w_prime(r);
    let p1 = wp.phi_prime(r);
    let p2 = wp.phi_second(r);
    let d = v.decompose(r);
    let vtot = d.v0 + d.v_s + d.v_l;
    // |u|/r stays finite at the origin for the polynomial envelopes.
    let u_over_r = j.u.norm() / r;
    let u2 = j.u.norm_sqr();
    let hu2 = h * h * j.du.norm_sqr();
    let cent = h * h * spec.nu * u_over_r * u_over_r;
    let f = hu2 - cent - (d.v_l - p1 * p1 - spec.energy) * u2;
    let pm = spec.sign.value();
    let shift = Complex64::new(vtot - p1 * p1 + h * p2 - spec.energy, pm * spec.epsilon);
    let cent_u = if r > 0.0 {
        j.u * (h * h * spec.nu / (r * r))
    } else {
        Complex64::new(0.0, 0.0)
    };
    let pu = -j.d2u * (h * h) + j.du * (2.0 * h * p1) + cent_u + shift * j.u;
    let uud = j.u * j.du.conj();
    let q = if r > 0.0 { 2.0 / r - dw / w } else { 0.0 };
    let eps_term = -pm * 2.0 * spec.epsilon * w * uud.im;
    let mut rhs = -2.0 * w * (pu * j.du.conj()).re + eps_term;
    if r > 0.0 {
        rhs += w * q * cent;
    }
    rhs += (4.0 / h * w * p1 + dw) * hu2;
    rhs += (dw * (spec.energy + p1 * p1 - d.v_l) + w * (2.0 * p1 * p2 - d.v_l_prime)) * u2;
    rhs += 2.0 * w * (d.v0 + d.v_s + h * p2) * uud.re;
    Terms {
        wf: w * f,
        rhs,
        eps_term,
        f,
    }
}

/// Largest relative mismatch between spectral `(wF)′` and the expanded
/// right side, with `nodes` Chebyshev intervals per smooth piece.
pub fn energy_identity_check<W: WeightProfile>(
    wp: &W,
    spec: &SectorSpec,
    v: &RadialPotential,
    u: &TestFunction,
    nodes: usize,
) -> Result<EnergyCheckState> {
    let (lo, hi) = u.check_support()?;
    if nodes < 8 {
        return Err(crate::Error::Config("need at least 8 Chebyshev nodes".into()));
    }
    let mut cuts: Vec<f64> = wp.kinks().into_iter().filter(|&k| k > lo && k < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);
    let mut st = EnergyCheckState::default();
    for seg in edges.windows(2) {
        let (s0, s1) = (seg[0], seg[1]);
        let xs = cheb_nodes(s0, s1, nodes);
        let mut wf = Vec::with_capacity(xs.len());
        let mut rhs = Vec::with_capacity(xs.len());
        for (i, &x) in xs.iter().enumerate() {
            // One-sided values at the piece ends.
            let r = if i == 0 {
                s0 * (1.0 + 1e-14)
            } else if i == nodes {
                s1 * (1.0 - 1e-14)
            } else {
                x
            };
            let j = u.jet(x);
            let t = terms(wp, spec, v, r, &j);
            wf.push(t.wf);
            rhs.push(t.rhs);
            st.max_eps_term = st.max_eps_term.max(t.eps_term.abs());
            st.r.push(x);
            st.u.push(j.u);
            st.du.push(j.du);
            st.f.push(t.f);
        }
        st.lhs.extend(cheb_diff(&wf, s0, s1));
        st.rhs.extend(rhs);
    }
    let scale = st.lhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(crate::Error::Numeric(alloc::format!(
            "(wF)' has scale {scale} on the support"
        )));
    }
    st.residual = st
        .lhs
        .iter()
        .zip(&st.rhs)
        .map(|(l, r)| (l - r).abs() / scale)
        .collect();
    st.max_residual = st.residual.iter().copied().fold(0.0, f64::max);
    Ok(st)
}
