//! Carleman weight `w`, phase `φ` and their auxiliary functions.
//!
//! Most of the construction has closed forms once written in `u = log r`:
//!
//! * `s + Φ₁(s) = s/(1 − κX(s))`, so `∫_1^r k/(s + Φ₁) ds = k(log r − κK(log r))`
//!   with `K(u) = ∫_0^u X(e^v) dv`, and every term of `X` except `χ` has an
//!   elementary antiderivative.
//! * The exponent of `w` for `r > a` integrates `max(2/G, 4c_L m_L/E)` in `u`;
//!   both branches have elementary antiderivatives, so only the points where
//!   the maximum switches branch are located numerically.
//!
//! `φ₀` on `(1, a]` is the one genuinely numerical integral and is served from
//! a [`CumulativeTable`].

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::math;
use crate::potential::{PotentialParams, RadialFamily};
use crate::quadrature::{integrate, integrate_to_infinity, node_list, CumulativeTable, QuadConfig};
use crate::scales::{ConstructionParams, DeltaCase, HScales};

/// Options for [`WeightPhase::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Tabulate `φ₀` (needed for fast `φ₀`, `φ`, `phi0_sup`; not for the
    /// inequality bracket).
    pub phase_table: bool,
    /// Node spacing of the `φ₀` table in `log r`.
    pub table_spacing: f64,
    pub quad: QuadConfig,
    /// Use `E/(2 c_L m_L)` in `𝒲` and `4 c_L m_L/(E s)` in `w`. When false the
    /// `c_L` factor is dropped in both places.
    pub cl_in_weight: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            phase_table: true,
            table_spacing: 0.125,
            quad: QuadConfig::with_tol(0.0, 1e-12),
            cl_in_weight: true,
        }
    }
}

impl BuildOptions {
    pub fn without_table() -> Self {
        Self {
            phase_table: false,
            ..Self::default()
        }
    }
}

/// Auxiliary functions selectable through [`WeightPhase::aux_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aux {
    W,
    Phi,
    Phi1,
    G,
    Q,
}

/// `(w, w′)` at a point; at `r = a` the right derivative is reported too.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WValue {
    pub w: f64,
    pub w_prime: f64,
    /// `Some(w′(a⁺))` when evaluated exactly at the jump `r = a`;
    /// `w_prime` is then the left value `2a`.
    pub w_prime_right: Option<f64>,
}

/// Result of [`WeightPhase::sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Pieces of `sup φ₀ = lim_{r→∞} φ₀(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi0Sup {
    pub total: f64,
    /// `∫_0^1 φ₀′`
    pub head: f64,
    /// `∫_1^a φ₀′`
    pub middle: f64,
    /// `∫_a^∞ φ₀′` from the closed form.
    pub tail: f64,
    /// The same tail integral by direct quadrature.
    pub tail_quadrature: f64,
    /// `∫_a^∞ G(a)/(s G(s)) ds`: `1/η` for δ > 0, `log a/(ρ̃ − 1)` for δ = 0.
    pub tail_factor: f64,
}

/// Evaluator bundle for `w`, `φ` and the auxiliary functions at one `(h, E)`.
#[derive(Debug, Clone)]
pub struct WeightPhase {
    pub scales: HScales,
    pub cp: ConstructionParams,
    pub params: PotentialParams,
    /// Energy used in `𝒲` and `w` for `r > a`.
    pub e: f64,
    pub b: f64,
    /// `‖s^{-2} Φ₁(s)‖_{L¹(1,∞)}`.
    pub phi1_l1: f64,
    opts: BuildOptions,
    case: DeltaCase,
    log_a: f64,
    a: f64,
    log_b: f64,
    tilde_ms_sq: RadialFamily,
    chi_log_lo: f64,
    chi_log_hi: f64,
    chi_total: f64,
    // Coefficient of m_L in the exponent of w: 4 c_L / E (or 4/E).
    c4: f64,
    // Branch switch points (in u) of the exponent integrand of w, and J(∞).
    switches: Vec<f64>,
    j_inf: f64,
    phi0_one: f64,
    phase_table: Option<CumulativeTable>,
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        math::ln(x)
    } else {
        f64::NEG_INFINITY
    }
}

impl WeightPhase {
    /// Builds the evaluator. `E` must lie in `[E_min, E_max]`.
    pub fn build(
        scales: HScales,
        cp: ConstructionParams,
        params: PotentialParams,
        e: f64,
        opts: BuildOptions,
    ) -> Result<Self> {
        if !(e >= cp.e_min && e <= cp.e_max) {
            return Err(Error::Config(format!(
                "E = {e} outside [E_min, E_max] = [{}, {}]",
                cp.e_min, cp.e_max
            )));
        }
        let adm = crate::scales::check_admissible(scales.h, scales.delta);
        if !adm.ok {
            return Err(Error::InadmissibleH {
                h: scales.h,
                reason: adm.failures.join("; "),
            });
        }
        let b = params.resolve_b(cp.e_min)?;
        let case = DeltaCase::of(scales.delta);
        if case == DeltaCase::Zero && !(cp.rho_tilde > 1.0) {
            return Err(domain("rho_tilde must be > 1 for δ = 0"));
        }
        let tilde_ms_sq = params.tilde_m_s_family(Some(scales.lambda))?.squared();
        let log_a = scales.log_a();
        let chi = params.chi;
        let chi_log_lo = math::ln(chi.lo());
        let chi_log_hi = math::ln(chi.hi());
        let quad = opts.quad;
        let chi_total = chi_log_lo
            + integrate(
                |v| chi.eval(math::exp(v)),
                chi_log_lo,
                chi_log_hi,
                &[],
                &quad,
            )?
            .value;
        let c4 = if opts.cl_in_weight {
            4.0 * params.c_l / e
        } else {
            4.0 / e
        };
        let phi0_one = 1.0 / (1.0 - 0.5 * params.beta);
        let mut wp = Self {
            scales,
            cp,
            params,
            e,
            b,
            phi1_l1: 0.0,
            opts,
            case,
            log_a,
            a: scales.a,
            log_b: math::ln(b),
            tilde_ms_sq,
            chi_log_lo,
            chi_log_hi,
            chi_total,
            c4,
            switches: Vec::new(),
            j_inf: 0.0,
            phi0_one,
            phase_table: None,
        };
        wp.phi1_l1 = wp.compute_phi1_l1()?;
        wp.switches = wp.find_switches();
        wp.j_inf = wp.j_integral(f64::INFINITY);
        if !wp.j_inf.is_finite() {
            return Err(Error::Numeric("exponent of w diverges at infinity".into()));
        }
        if opts.phase_table {
            let nodes = node_list(
                0.0,
                log_a,
                opts.table_spacing,
                &[chi_log_lo, chi_log_hi, wp.log_b],
            );
            let f = |u: f64| wp.phase_integrand(u);
            let table = CumulativeTable::build(&f, nodes, quad)?;
            wp.phase_table = Some(table);
        }
        Ok(wp)
    }

    pub fn options(&self) -> &BuildOptions {
        &self.opts
    }

    /// `a` (may be `+∞` when `h` is tiny; see [`log_a`](Self::log_a)).
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn log_a(&self) -> f64 {
        self.log_a
    }

    /// Kinks of the construction: `1`, `b`, `a`.
    pub fn kinks(&self) -> [f64; 3] {
        [1.0, self.b, self.a]
    }

    // ---- Φ₁ and the closed-form phase exponent ----------------------------

    /// `X(r) = m̃_S² + χ + (y + m_L) 1_{1<r≤b}`.
    pub fn x_factor(&self, r: f64) -> f64 {
        let mut x = self.tilde_ms_sq.eval(r) + self.params.chi.eval(r);
        if r > 1.0 && r <= self.b {
            x += self.params.y.eval(r) + self.params.m_l.eval(r);
        }
        x
    }

    fn x_factor_log(&self, u: f64) -> f64 {
        let mut x = self.tilde_ms_sq.eval_log(u);
        if u < self.chi_log_hi {
            x += self.params.chi.eval(math::exp(u));
        }
        if u > 0.0 && u <= self.log_b {
            x += self.params.y.eval_log(u) + self.params.m_l.eval_log(u);
        }
        x
    }

    fn chi_log_integral(&self, u: f64) -> f64 {
        if u <= self.chi_log_lo {
            u.max(0.0)
        } else if u >= self.chi_log_hi {
            self.chi_total
        } else {
            let chi = self.params.chi;
            self.chi_log_lo
                + integrate(
                    |v| chi.eval(math::exp(v)),
                    self.chi_log_lo,
                    u,
                    &[],
                    &self.opts.quad,
                )
                .map(|r| r.value)
                .unwrap_or(f64::NAN)
        }
    }

    /// `K(u) = ∫_0^u X(e^v) dv`.
    pub fn x_log_integral(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let ub = u.min(self.log_b);
        self.tilde_ms_sq.log_integral(0.0, u)
            + self.chi_log_integral(u)
            + self.params.y.log_integral(0.0, ub)
            + self.params.m_l.log_integral(0.0, ub)
    }

    /// `∫_1^r ds/(s + Φ₁(s))` for `r ≥ 1`.
    pub fn i_integral(&self, r: f64) -> f64 {
        if r <= 1.0 {
            return 0.0;
        }
        let u = math::ln(r);
        u - self.cp.kappa * self.x_log_integral(u)
    }

    fn compute_phi1_l1(&self) -> Result<f64> {
        let kappa = self.cp.kappa;
        let f = |u: f64| {
            let x = self.x_factor_log(u);
            kappa * x / (1.0 - kappa * x)
        };
        let q = self.opts.quad;
        let head = integrate(
            f,
            0.0,
            self.log_b,
            &[self.chi_log_lo, self.chi_log_hi],
            &q,
        )?;
        let tail = integrate_to_infinity(
            |u| {
                let x = self.tilde_ms_sq.eval_log(u);
                kappa * x / (1.0 - kappa * x)
            },
            self.log_b,
            &q,
        )?;
        Ok(head.value + tail.value)
    }

    // ---- phase ------------------------------------------------------------

    /// `log φ₀′(r)`.
    pub fn ln_phi0_prime(&self, r: f64) -> f64 {
        let k = self.scales.k;
        if r <= 1.0 {
            -0.5 * self.params.beta * math::ln(r)
        } else {
            let u = math::ln(r);
            if u <= self.log_a {
                -k * self.i_integral(r)
            } else {
                let at_a = -k * (self.log_a - self.cp.kappa * self.x_log_integral(self.log_a));
                at_a + self.log_a + self.ln_g_log(self.log_a) - u - self.ln_g_log(u)
            }
        }
    }

    pub fn phi0_prime(&self, r: f64) -> f64 {
        math::exp(self.ln_phi0_prime(r))
    }

    /// `φ₀′(a)`.
    pub fn phi0_prime_at_a(&self) -> f64 {
        math::exp(-self.scales.k * (self.log_a - self.cp.kappa * self.x_log_integral(self.log_a)))
    }

    // e^u φ₀′(e^u), the integrand of φ₀ in u on (0, log a].
    fn phase_integrand(&self, u: f64) -> f64 {
        let k = self.scales.k;
        math::exp((1.0 - k) * u + k * self.cp.kappa * self.x_log_integral(u))
    }

    fn middle_integral(&self, u: f64) -> Result<f64> {
        let u = u.min(self.log_a);
        if u <= 0.0 {
            return Ok(0.0);
        }
        let f = |v: f64| self.phase_integrand(v);
        match &self.phase_table {
            Some(t) => t.eval(&f, u),
            None => Ok(integrate(
                f,
                0.0,
                u,
                &[self.chi_log_lo, self.chi_log_hi, self.log_b],
                &self.opts.quad,
            )?
            .value),
        }
    }

    // ∫_a^r G(a)/(s G(s)) ds for r ≥ a (u = log r).
    fn tail_factor_to(&self, u: f64) -> f64 {
        let ua = self.log_a;
        match self.case {
            DeltaCase::Zero => {
                let rt = self.cp.rho_tilde;
                let rest = if u.is_infinite() {
                    1.0
                } else {
                    -libm::expm1((1.0 - rt) * math::ln(u / ua))
                };
                ua * rest / (rt - 1.0)
            }
            _ => {
                let eta = self.scales.eta;
                if u.is_infinite() {
                    1.0 / eta
                } else {
                    -libm::expm1(-eta * (u - ua)) / eta
                }
            }
        }
    }

    /// `φ₀(r) = ∫_0^r φ₀′`.
    pub fn phi0(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain(format!("phi0 at r = {r}")));
        }
        let beta = self.params.beta;
        if r <= 1.0 {
            return Ok(self.phi0_one * math::powf(r, 1.0 - 0.5 * beta));
        }
        let u = math::ln(r);
        let mid = self.middle_integral(u)?;
        if u <= self.log_a {
            return Ok(self.phi0_one + mid);
        }
        let tail = self.phi0_prime_at_a() * math::exp(self.log_a) * self.tail_factor_to(u);
        Ok(self.phi0_one + mid + tail)
    }

    /// `φ = τ h^{-σ} φ₀`.
    pub fn phi(&self, r: f64) -> Result<f64> {
        Ok(self.phase_scale() * self.phi0(r)?)
    }

    /// `τ h^{-σ}`.
    pub fn phase_scale(&self) -> f64 {
        self.cp.tau * math::powf(self.scales.h, -self.cp.sigma)
    }

    /// `log φ′(r)`.
    pub fn ln_phi_prime(&self, r: f64) -> f64 {
        math::ln(self.cp.tau) - self.cp.sigma * math::ln(self.scales.h) + self.ln_phi0_prime(r)
    }

    pub fn phi_prime(&self, r: f64) -> f64 {
        math::exp(self.ln_phi_prime(r))
    }

    /// `φ₀` without the checks, `NaN` on failure (for grids).
    pub fn phi0_or_nan(&self, r: f64) -> f64 {
        self.phi0(r).unwrap_or(f64::NAN)
    }

    // ---- auxiliary functions ----------------------------------------------

    fn ln_g_log(&self, u: f64) -> f64 {
        match self.case {
            DeltaCase::Zero => self.cp.rho_tilde * math::ln(u),
            _ => self.scales.eta * u,
        }
    }

    /// `𝒢(r)`; for δ = 0 only defined for `r > 1`.
    pub fn g(&self, r: f64) -> f64 {
        match self.case {
            DeltaCase::Zero => {
                let l = math::ln(r);
                if l > 0.0 {
                    math::powf(l, self.cp.rho_tilde)
                } else {
                    f64::NAN
                }
            }
            _ => math::powf(r, self.scales.eta),
        }
    }

    /// `Φ₁(r) = κ r X/(1 − κ X)`.
    pub fn phi1(&self, r: f64) -> f64 {
        let x = self.x_factor(r);
        self.cp.kappa * r * x / (1.0 - self.cp.kappa * x)
    }

    /// `Φ = φ₀″/φ₀′`, left-continuous at the kinks.
    pub fn big_phi(&self, r: f64) -> f64 {
        if r <= 1.0 {
            -0.5 * self.params.beta / r
        } else if math::ln(r) <= self.log_a {
            let kx = self.cp.kappa * self.x_factor(r);
            // −k/(r + Φ₁) with r + Φ₁ = r/(1 − κX).
            -self.scales.k * (1.0 - kx) / r
        } else {
            match self.case {
                DeltaCase::Zero => -(1.0 + self.cp.rho_tilde / math::ln(r)) / r,
                _ => -(1.0 + self.scales.eta) / r,
            }
        }
    }

    fn m_l_term(&self, r: f64) -> f64 {
        // 2 c_L m_L / E (or 2 m_L / E).
        0.5 * self.c4 * self.params.m_l.eval(r)
    }

    /// `𝒲 = w/w′`. At `r = a` the left value `a/2` is returned.
    pub fn big_w(&self, r: f64) -> f64 {
        if r <= 1.0 || math::ln(r) <= self.log_a {
            0.5 * r
        } else {
            // (r/2) min(G, E/(2 c_L m_L)) = (r/2) / max(1/G, 2 c_L m_L / E).
            let inv_g = math::exp(-self.ln_g_log(math::ln(r)));
            0.5 * r / inv_g.max(self.m_l_term(r))
        }
    }

    /// `q = 2/r − w′/w` (zero below `a`).
    pub fn q(&self, r: f64) -> f64 {
        if r <= 1.0 || math::ln(r) <= self.log_a {
            0.0
        } else {
            let inv_g = math::exp(-self.ln_g_log(math::ln(r)));
            (2.0 / r) * (1.0 - inv_g.max(self.m_l_term(r)))
        }
    }

    /// Checked access to the auxiliary functions.
    pub fn aux_eval(&self, r: f64, which: Aux) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(domain(format!("aux evaluated at r = {r}")));
        }
        Ok(match which {
            Aux::W => self.big_w(r),
            Aux::Phi => self.big_phi(r),
            Aux::Phi1 => self.phi1(r),
            Aux::G => {
                if self.case == DeltaCase::Zero && r <= 1.0 {
                    return Err(domain("G = (log r)^rho_tilde needs r > 1"));
                }
                self.g(r)
            }
            Aux::Q => {
                if r == self.a {
                    return Err(domain("q is not defined at r = a"));
                }
                self.q(r)
            }
        })
    }

    // ---- weight -----------------------------------------------------------

    // Exponent integrand of w in u: max(2/G(e^u), c4 m_L(e^u)).
    fn j_branches(&self, u: f64) -> (f64, f64) {
        let g_branch = 2.0 * math::exp(-self.ln_g_log(u));
        let m_branch = self.c4 * self.params.m_l.eval_log(u);
        (g_branch, m_branch)
    }

    fn j_integrand(&self, u: f64) -> f64 {
        let (g, m) = self.j_branches(u);
        g.max(m)
    }

    fn find_switches(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.c4 == 0.0 {
            return out;
        }
        let ua = self.log_a;
        let diff = |u: f64| {
            let (g, m) = self.j_branches(u);
            ln_or_neg_inf(g) - ln_or_neg_inf(m)
        };
        // Geometric scan in u over [u_a, 1e10 u_a]; beyond that both
        // branches are monotone power/exponential laws with a fixed order.
        let n = 4000;
        let span = math::ln(1e10);
        let mut prev_u = ua;
        let mut prev = diff(ua);
        for i in 1..=n {
            let u = ua * math::exp(span * i as f64 / n as f64);
            let d = diff(u);
            if prev.signum() != d.signum() && prev.is_finite() && d.is_finite() {
                let (mut lo, mut hi) = (prev_u, u);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if diff(mid).signum() == prev.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            prev_u = u;
            prev = d;
        }
        out
    }

    fn branch_integral(&self, use_g: bool, u1: f64, u2: f64) -> f64 {
        if use_g {
            match self.case {
                DeltaCase::Zero => {
                    let rt = self.cp.rho_tilde;
                    let p1 = math::powf(u1, 1.0 - rt);
                    let p2 = if u2.is_infinite() {
                        0.0
                    } else {
                        math::powf(u2, 1.0 - rt)
                    };
                    2.0 * (p1 - p2) / (rt - 1.0)
                }
                _ => {
                    let eta = self.scales.eta;
                    let e1 = math::exp(-eta * u1);
                    if u2.is_infinite() {
                        2.0 * e1 / eta
                    } else {
                        -2.0 * e1 * libm::expm1(-eta * (u2 - u1)) / eta
                    }
                }
            }
        } else {
            self.c4 * self.params.m_l.log_integral(u1, u2)
        }
    }

    /// `J(u) = ∫_{log a}^u max(2/G, 4c_L m_L/E)(e^v) dv` for `u ≥ log a`.
    pub fn j_integral(&self, u: f64) -> f64 {
        let ua = self.log_a;
        if u <= ua {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut lo = ua;
        let mut cuts: Vec<f64> = self.switches.iter().copied().filter(|&s| s < u).collect();
        cuts.push(u);
        for &hi in &cuts {
            if hi <= lo {
                continue;
            }
            let probe = if hi.is_infinite() {
                2.0 * lo + 1.0
            } else {
                0.5 * (lo + hi)
            };
            let (g, m) = self.j_branches(probe);
            acc += self.branch_integral(g >= m, lo, hi);
            lo = hi;
        }
        acc
    }

    /// `log w(r)`.
    pub fn ln_w(&self, r: f64) -> f64 {
        let u = math::ln(r);
        if u <= self.log_a {
            2.0 * u
        } else {
            2.0 * self.log_a + self.j_integral(u)
        }
    }

    /// `log w′(r)`; the left derivative at `r = a`.
    pub fn ln_w_prime(&self, r: f64) -> f64 {
        let u = math::ln(r);
        if u <= self.log_a {
            math::ln(2.0) + u
        } else {
            self.ln_w(r) + math::ln(self.j_integrand(u)) - u
        }
    }

    /// `log w(∞) = 2 log a + J(∞)`.
    pub fn ln_w_sup(&self) -> f64 {
        2.0 * self.log_a + self.j_inf
    }

    /// `(w, w′)` at `r`, with both one-sided derivatives at `r = a`.
    pub fn w_eval(&self, r: f64) -> Result<WValue> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(domain(format!("w evaluated at r = {r}")));
        }
        let w = math::exp(self.ln_w(r));
        let w_prime = math::exp(self.ln_w_prime(r));
        let w_prime_right = if r == self.a {
            Some(math::exp(2.0 * self.log_a + math::ln(self.j_integrand(self.log_a)) - self.log_a))
        } else {
            None
        };
        Ok(WValue {
            w,
            w_prime,
            w_prime_right,
        })
    }

    // ---- checks -----------------------------------------------------------

    /// `−log r ≤ −∫_1^r ds/(s + Φ₁) ≤ −log r + ‖s^{-2}Φ₁‖_{L¹}`.
    pub fn sandwich_check(&self, r: f64) -> Result<Sandwich> {
        if !(r >= 1.0) {
            return Err(domain(format!("sandwich check needs r >= 1 (r = {r})")));
        }
        let lr = math::ln(r);
        let lhs = -lr;
        let mid = -self.i_integral(r);
        let rhs = -lr + self.phi1_l1;
        let tol = 1e-10 * lr.abs().max(1.0);
        Ok(Sandwich {
            lhs,
            mid,
            rhs,
            ok: lhs <= mid + tol && mid <= rhs + tol,
        })
    }

    /// `lim_{r→∞} φ₀(r)` in three pieces with the analytic tail.
    pub fn phi0_sup(&self) -> Result<Phi0Sup> {
        if self.case == DeltaCase::Zero && !(self.cp.rho_tilde > 1.0) {
            return Err(domain("phase tail diverges for rho_tilde <= 1"));
        }
        let head = self.phi0_one;
        let middle = self.middle_integral(self.log_a)?;
        let tail_factor = self.tail_factor_to(f64::INFINITY);
        let amp = self.phi0_prime_at_a() * math::exp(self.log_a);
        let tail = amp * tail_factor;
        // Same tail by quadrature in u: ∫ G(a)/G(e^u) du over (log a, ∞).
        let ua = self.log_a;
        let lga = self.ln_g_log(ua);
        let qc = QuadConfig::with_tol(0.0, 1e-11);
        let tq = match self.case {
            // u = u_a e^s turns the algebraic tail into an exponential one.
            DeltaCase::Zero => integrate_to_infinity(
                |s| {
                    let u = ua * math::exp(s);
                    u * math::exp(lga - self.ln_g_log(u))
                },
                0.0,
                &qc,
            )?,
            _ => integrate_to_infinity(|u| math::exp(lga - self.ln_g_log(u)), ua, &qc)?,
        };
        Ok(Phi0Sup {
            total: head + middle + tail,
            head,
            middle,
            tail,
            tail_quadrature: amp * tq.value,
            tail_factor,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::{default_construction, derive_scales};
    use approx::assert_relative_eq;

    fn build(delta: f64, beta: f64, h: f64) -> WeightPhase {
        let params = PotentialParams::with_defaults(3, beta, 1.0, delta, 1.0, 1.5, 1.0);
        let cp = default_construction(delta, beta, 1.5, 0.7).unwrap();
        let s = derive_scales(h, delta, &cp).unwrap();
        WeightPhase::build(s, cp, params, 1.0, BuildOptions::default()).unwrap()
    }

    #[test]
    fn w_is_continuous_at_a() {
        for &d in &[0.0, 0.5, 1.0] {
            let wp = build(d, 1.0, 1e-9);
            let a = wp.a();
            let left = wp.ln_w(a * (1.0 - 1e-13));
            let right = wp.ln_w(a * (1.0 + 1e-13));
            assert_relative_eq!(left, 2.0 * a.ln(), max_relative = 1e-11);
            assert_relative_eq!(right, 2.0 * a.ln(), max_relative = 1e-11);
            let v = wp.w_eval(a).unwrap();
            assert!(v.w_prime_right.is_some());
        }
    }

    #[test]
    fn small_r_values() {
        let wp = build(1.0, 1.0, 1e-9);
        let v = wp.w_eval(0.5).unwrap();
        assert_relative_eq!(v.w, 0.25);
        assert_relative_eq!(v.w_prime, 1.0);
        assert_relative_eq!(wp.big_w(0.5), 0.25);
        assert_eq!(wp.q(0.5), 0.0);
        assert_relative_eq!(wp.big_phi(0.5), -1.0);
        assert_relative_eq!(wp.phi0_prime(0.25), 2.0, max_relative = 1e-14);
        assert_relative_eq!(wp.phi0(1.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(wp.phi0_prime(1.0), 1.0);
        assert_relative_eq!(wp.phi0_prime(1.0 + 1e-12), 1.0, max_relative = 1e-11);
    }

    #[test]
    fn phi0_prime_is_continuous_at_a() {
        for &d in &[0.0, 0.5, 1.0] {
            let wp = build(d, 1.0, 1e-9);
            let a = wp.a();
            let l = wp.phi0_prime(a * (1.0 - 1e-14));
            let r = wp.phi0_prime(a * (1.0 + 1e-14));
            assert_relative_eq!(l, r, max_relative = 1e-10);
            assert_relative_eq!(l, wp.phi0_prime_at_a(), max_relative = 1e-10);
        }
    }

    #[test]
    fn g_at_e_is_one_for_delta_zero() {
        let wp = build(0.0, 1.0, 1e-9);
        assert_relative_eq!(wp.aux_eval(core::f64::consts::E, Aux::G).unwrap(), 1.0, max_relative = 1e-15);
        assert!(wp.aux_eval(0.5, Aux::G).is_err());
    }

    #[test]
    fn table_and_direct_quadrature_agree() {
        let params = PotentialParams::with_defaults(3, 1.0, 1.0, 0.5, 1.0, 1.5, 1.0);
        let cp = default_construction(0.5, 1.0, 1.5, 0.7).unwrap();
        let s = derive_scales(1e-12, 0.5, &cp).unwrap();
        let with = WeightPhase::build(s, cp, params.clone(), 1.0, BuildOptions::default()).unwrap();
        let without = WeightPhase::build(s, cp, params, 1.0, BuildOptions::without_table()).unwrap();
        for &r in &[1.05, 1.5, 3.0, 1e3, with.a() * 0.9, with.a() * 7.0] {
            assert_relative_eq!(
                with.phi0(r).unwrap(),
                without.phi0(r).unwrap(),
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn phi0_sup_tail_closed_form_matches_quadrature() {
        for &d in &[0.0, 0.5, 1.0] {
            let wp = build(d, 1.0, 1e-8);
            let s = wp.phi0_sup().unwrap();
            assert_relative_eq!(s.tail, s.tail_quadrature, max_relative = 1e-8);
            assert_relative_eq!(s.head, 2.0, max_relative = 1e-15);
        }
    }
}
