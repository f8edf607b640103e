//! Pointwise verification of `A − (1+γ)B ≥ (E_min/2) w′`, calibration of
//! `(τ, t)`, empirical `h` thresholds and empirical lemma constants.
//!
//! Every margin is reported per unit `w′`: `w′` is positive away from the
//! kinks and grows like `h^{-2M}` beyond `a`, so dividing it out keeps the
//! numbers finite for tiny `h` without changing any verdict.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::exec::Executor;
use crate::fit::{fit_report, Fit, FitModel};
use crate::math;
use crate::potential::{eval_envelope, EnvelopeComponent, PotentialParams, RadialPotential};
use crate::scales::{derive_scales, max_admissible_h, ConstructionParams, DeltaCase};
use crate::weight::{BuildOptions, WeightPhase};

/// How the potential enters the bracket.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum Mode {
    /// Worst case over the hypothesis class.
    Envelope,
    /// One concrete potential.
    Concrete { potential: RadialPotential },
}

/// The three regions of the radial axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Region {
    /// `(0, 1)`
    #[cfg_attr(feature = "serde", serde(rename = "(0,1)"))]
    Inner,
    /// `(1, a)`
    #[cfg_attr(feature = "serde", serde(rename = "(1,a)"))]
    Middle,
    /// `(a, ∞)`
    #[cfg_attr(feature = "serde", serde(rename = "(a,inf)"))]
    Outer,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Inner, Region::Middle, Region::Outer];

    pub fn label(self) -> &'static str {
        match self {
            Region::Inner => "(0,1)",
            Region::Middle => "(1,a)",
            Region::Outer => "(a,inf)",
        }
    }

    pub fn of(wp: &WeightPhase, r: f64) -> Self {
        if r < 1.0 {
            Region::Inner
        } else if math::ln(r) < wp.log_a() {
            Region::Middle
        } else {
            Region::Outer
        }
    }
}

/// Log-spaced radial grid `[r_min, r_max_factor · a]` without the kinks,
/// plus one point on each side of every kink.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GridSpec {
    pub r_min: f64,
    /// Upper end as a multiple of `a`.
    pub r_max_factor: f64,
    pub points_per_decade: u32,
    /// Points within this relative distance of `1`, `b` or `a` are dropped.
    pub exclusion: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_min: 1e-4,
            r_max_factor: 1e4,
            points_per_decade: 64,
            exclusion: 1e-6,
        }
    }
}

impl GridSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < 1.0) {
            return Err(Error::Config(format!("grid r_min = {} must lie in (0, 1)", self.r_min)));
        }
        if !(self.r_max_factor > 1.0) {
            return Err(Error::Config("grid r_max_factor must exceed 1".into()));
        }
        if self.points_per_decade == 0 {
            return Err(Error::Config("grid needs points_per_decade >= 1".into()));
        }
        if !(self.exclusion > 0.0 && self.exclusion < 0.1) {
            return Err(Error::Config("grid exclusion must lie in (0, 0.1)".into()));
        }
        Ok(())
    }

    /// Grid points for one weight/phase instance.
    pub fn points(&self, wp: &WeightPhase) -> Vec<f64> {
        let l0 = math::ln(self.r_min);
        let l1 = wp.log_a() + math::ln(self.r_max_factor);
        let decades = (l1 - l0) / core::f64::consts::LN_10;
        let n = math::ceil(decades * self.points_per_decade as f64).max(1.0) as usize;
        let kinks = [0.0, math::ln(wp.b), wp.log_a()];
        let mut us: Vec<f64> = (0..=n)
            .map(|i| l0 + (l1 - l0) * i as f64 / n as f64)
            .filter(|u| kinks.iter().all(|k| (u - k).abs() > self.exclusion))
            .collect();
        // One-sided limits at the kinks are where the margin is smallest.
        for k in kinks {
            for side in [-2.0, 2.0] {
                let u = k + side * self.exclusion;
                if u > l0 && u < l1 {
                    us.push(u);
                }
            }
        }
        us.sort_by(f64::total_cmp);
        us.into_iter().map(math::exp).collect()
    }
}

/// The potential terms entering the bracket at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerms {
    /// `|V₀ + V_S|` (or its envelope).
    pub v0s: f64,
    pub v_l: f64,
    pub v_l_prime: f64,
}

/// Potential terms of `mode` at `r`.
pub fn potential_terms(params: &PotentialParams, mode: &Mode, r: f64) -> Result<PotentialTerms> {
    Ok(match mode {
        Mode::Envelope => {
            let env = |c| eval_envelope(params, c, r, None);
            PotentialTerms {
                v0s: env(EnvelopeComponent::V0)? + env(EnvelopeComponent::VS)?,
                v_l: env(EnvelopeComponent::VL)?,
                v_l_prime: env(EnvelopeComponent::VLprime)?,
            }
        }
        Mode::Concrete { potential } => {
            let d = potential.decompose(r);
            PotentialTerms {
                v0s: (d.v0 + d.v_s).abs(),
                v_l: d.v_l,
                v_l_prime: d.v_l_prime,
            }
        }
    })
}

/// Both lower-bound forms of `(A − (1+γ)B)/w′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    /// The form with `|h^{-1}V + Φφ′|² ≤ 2h^{-2}|V|² + 2|Φφ′|²` split.
    pub separated: f64,
    /// The form keeping `(h^{-1}|V| + |Φ|φ′)²` together (never smaller).
    pub combined: f64,
}

fn check_not_kink(wp: &WeightPhase, r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(format!("bracket evaluated at r = {r}")));
    }
    if r == 1.0 || r == wp.a() {
        return Err(domain(format!("bracket evaluated at the kink r = {r}")));
    }
    Ok(())
}

/// The bracket and its combined variant at `r`.
pub fn bracket_parts(wp: &WeightPhase, r: f64, mode: &Mode) -> Result<Bracket> {
    check_not_kink(wp, r)?;
    let t = potential_terms(&wp.params, mode, r)?;
    let h = wp.scales.h;
    let gamma = wp.cp.gamma;
    let e = wp.e;
    let ww = wp.big_w(r);
    let phi = wp.big_phi(r);
    let dphi = wp.phi_prime(r);
    let q = wp.q(r);
    let m = ww.min(0.25 * h / dphi);
    let common = e - t.v_l - ww * (t.v_l_prime + h * h * q / (4.0 * r * r));
    let separated = common
        + dphi * dphi * (1.0 + 2.0 * ww * phi - 2.0 * (1.0 + gamma) * ww * phi * phi * m)
        - 2.0 * (1.0 + gamma) * ww * m * (t.v0s / h) * (t.v0s / h);
    let s = t.v0s / h + phi.abs() * dphi;
    let combined = common + dphi * dphi * (1.0 + 2.0 * ww * phi) - (1.0 + gamma) * ww * m * s * s;
    Ok(Bracket {
        separated,
        combined,
    })
}

/// `E + (φ′)²(1 + 2𝒲Φ − 2(1+γ)𝒲Φ² min(𝒲, h/4φ′)) − 2(1+γ)h^{-2}𝒲|V₀+V_S|²
/// min(𝒲, h/4φ′) − V_L − 𝒲(V_L′ + h²q/(4r²))`.
pub fn bracket_eval(wp: &WeightPhase, r: f64, mode: &Mode) -> Result<f64> {
    bracket_parts(wp, r, mode).map(|b| b.separated)
}

/// Closed-form lower bound of the bracket on `(0, 1)` in envelope mode.
pub fn inner_closed_form(wp: &WeightPhase, r: f64) -> f64 {
    let beta = wp.params.beta;
    let gamma = wp.cp.gamma;
    let tau = wp.cp.tau;
    let lead = tau * tau * (1.0 - 0.5 * beta - (1.0 + gamma) * beta * beta / 8.0);
    let v = (1.0 + gamma) * wp.params.c0 * wp.params.c0 * math::powf(r, 1.0 - 0.5 * beta)
        / (4.0 * tau);
    wp.e + math::powf(wp.scales.h, -2.0 * wp.cp.sigma) * math::powf(r, -beta) * (lead - v)
}

/// Exact `A` and `B` for a concrete potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AB {
    pub a: f64,
    pub b: f64,
    pub w_prime: f64,
    /// `A/w′`
    pub a_unit: f64,
    /// `B/w′`
    pub b_unit: f64,
}

/// `A = (w(E + (φ′)² − V_L))′ − h²wq/(4r²)` and
/// `B = w²|h^{-1}(V₀+V_S) + φ″|²/(w′ + 4h^{-1}φ′w)`.
pub fn ab_eval(wp: &WeightPhase, r: f64, v: &RadialPotential) -> Result<AB> {
    check_not_kink(wp, r)?;
    if !v.has_derivative() {
        return Err(Error::Unsupported(
            "A needs V_L′ and a differentiable concrete potential".into(),
        ));
    }
    let d = v.decompose(r);
    let h = wp.scales.h;
    let e = wp.e;
    let ww = wp.big_w(r);
    let dphi = wp.phi_prime(r);
    let ddphi = wp.big_phi(r) * dphi;
    let q = wp.q(r);
    // Divide A and B by w′ and use w/w′ = 𝒲.
    let a_unit = e + dphi * dphi - d.v_l + ww * (2.0 * dphi * ddphi - d.v_l_prime)
        - h * h * ww * q / (4.0 * r * r);
    let s = (d.v0 + d.v_s) / h + ddphi;
    let b_unit = ww * ww * s * s / (1.0 + 4.0 * dphi * ww / h);
    let w_prime = wp.w_eval(r)?.w_prime;
    Ok(AB {
        a: a_unit * w_prime,
        b: b_unit * w_prime,
        w_prime,
        a_unit,
        b_unit,
    })
}

/// Per-region summary of one verification run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionReport {
    pub region: Region,
    pub points: usize,
    pub min_margin: f64,
    pub failures: usize,
}

/// Outcome of [`verify_key_lower`] at one `h`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InequalityReport {
    pub delta: f64,
    pub h: f64,
    pub tau: f64,
    pub t: f64,
    pub grid: Vec<f64>,
    /// `bracket − E_min/2` at each grid point.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    /// Minimum of the combined-form margin.
    pub min_combined_margin: f64,
    pub tolerance: f64,
    pub regions: Vec<RegionReport>,
    pub failures: Vec<(f64, f64)>,
    pub empirical_h_threshold: Option<f64>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn region_passed(&self, region: Region) -> bool {
        self.regions
            .iter()
            .filter(|r| r.region == region)
            .all(|r| r.failures == 0)
    }

    pub fn failed_regions(&self) -> Vec<Region> {
        self.regions
            .iter()
            .filter(|r| r.failures > 0)
            .map(|r| r.region)
            .collect()
    }
}

/// Evaluates the margin on the grid.
pub fn verify_key_lower(wp: &WeightPhase, grid: &GridSpec, mode: &Mode) -> Result<InequalityReport> {
    grid.check()?;
    let points = grid.points(wp);
    let target = 0.5 * wp.cp.e_min;
    let tolerance = 1e-9 * target;
    let mut margins = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    let mut regions: Vec<RegionReport> = Region::ALL
        .iter()
        .map(|&region| RegionReport {
            region,
            points: 0,
            min_margin: f64::INFINITY,
            failures: 0,
        })
        .collect();
    let mut min_margin = f64::INFINITY;
    let mut min_combined = f64::INFINITY;
    for &r in &points {
        let b = bracket_parts(wp, r, mode)?;
        // NaN counts as a failure.
        let m = if b.separated.is_nan() {
            f64::NEG_INFINITY
        } else {
            b.separated - target
        };
        let slot = &mut regions[Region::of(wp, r) as usize];
        slot.points += 1;
        slot.min_margin = slot.min_margin.min(m);
        if m < -tolerance {
            slot.failures += 1;
            failures.push((r, m));
        }
        min_margin = min_margin.min(m);
        min_combined = min_combined.min(b.combined - target);
        margins.push(m);
    }
    regions.retain(|r| r.points > 0);
    Ok(InequalityReport {
        delta: wp.scales.delta,
        h: wp.scales.h,
        tau: wp.cp.tau,
        t: wp.cp.t,
        grid: points,
        margins,
        min_margin,
        min_combined_margin: min_combined,
        tolerance,
        regions,
        failures,
        empirical_h_threshold: None,
    })
}

/// Everything needed to verify one parameter case at any `h`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Case {
    pub params: PotentialParams,
    pub construction: ConstructionParams,
    /// Energy used for `w` and the bracket.
    pub energy: f64,
    pub mode: Mode,
    pub grid: GridSpec,
    /// Replace `c_L` by 1 in `w` and `𝒲`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub drop_cl_in_weight: bool,
}

impl Case {
    pub fn new(params: PotentialParams, construction: ConstructionParams) -> Self {
        Self {
            energy: construction.e_min,
            params,
            construction,
            mode: Mode::Envelope,
            grid: GridSpec::default(),
            drop_cl_in_weight: false,
        }
    }

    pub fn with_tau_t(&self, tau: f64, t: f64) -> Self {
        let mut c = self.clone();
        c.construction.tau = tau;
        c.construction.t = t;
        c
    }

    pub fn build_options(&self, phase_table: bool) -> BuildOptions {
        BuildOptions {
            phase_table,
            cl_in_weight: !self.drop_cl_in_weight,
            ..BuildOptions::default()
        }
    }

    /// Weight/phase at `h`, without the `φ₀` table.
    pub fn weight_phase(&self, h: f64) -> Result<WeightPhase> {
        self.weight_phase_with(h, false)
    }

    pub fn weight_phase_with(&self, h: f64, phase_table: bool) -> Result<WeightPhase> {
        let s = derive_scales(h, self.params.delta, &self.construction)?;
        WeightPhase::build(
            s,
            self.construction,
            self.params.clone(),
            self.energy,
            self.build_options(phase_table),
        )
    }

    pub fn verify(&self, h: f64) -> Result<InequalityReport> {
        let wp = self.weight_phase(h)?;
        verify_key_lower(&wp, &self.grid, &self.mode)
    }

    /// Largest `h` accepted by the construction.
    pub fn h_max(&self) -> f64 {
        max_admissible_h(self.params.delta)
    }
}

/// Result of [`calibrate`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Calibration {
    pub tau: f64,
    pub t: f64,
    pub reports: Vec<InequalityReport>,
}

/// Calibration search ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSearch {
    /// `τ ∈ {2^0, …, 2^max_tau_exponent}`.
    pub max_tau_exponent: u32,
    /// `t ∈ {1, …, max_t}`.
    pub max_t: u32,
}

impl Default for CalibrationSearch {
    fn default() -> Self {
        Self {
            max_tau_exponent: 20,
            max_t: 64,
        }
    }
}

fn verify_all<E: Executor>(case: &Case, h_list: &[f64], exec: &E) -> Result<Vec<InequalityReport>> {
    exec.map(h_list, |&h| case.verify(h)).into_iter().collect()
}

/// Smallest `τ = 2^j`, then smallest integer `t`, such that the inequality
/// holds at every `h` in `h_list`.
///
/// `τ` is chosen against the regions `(0,1)` and `(1,a)` with `t = 1`; `t`
/// then only has to fix `(a,∞)`. If no `t` works for a `τ`, the next `τ` is
/// tried.
pub fn calibrate<E: Executor>(
    case: &Case,
    h_list: &[f64],
    search: &CalibrationSearch,
    exec: &E,
) -> Result<Calibration> {
    if h_list.is_empty() {
        return Err(Error::Config("calibration needs at least one h".into()));
    }
    let mut last_failure = String::new();
    for j in 0..=search.max_tau_exponent {
        let tau = (1u64 << j) as f64;
        let reports = verify_all(&case.with_tau_t(tau, 1.0), h_list, exec)?;
        let inner_ok = reports
            .iter()
            .all(|r| r.region_passed(Region::Inner) && r.region_passed(Region::Middle));
        if !inner_ok {
            last_failure = describe_failure(&reports);
            continue;
        }
        if reports.iter().all(InequalityReport::passed) {
            return Ok(Calibration {
                tau,
                t: 1.0,
                reports,
            });
        }
        // t only enters a (through M) when δ = 0.
        if DeltaCase::of(case.params.delta) != DeltaCase::Zero {
            last_failure = describe_failure(&reports);
            continue;
        }
        for t in 2..=search.max_t {
            let reports = verify_all(&case.with_tau_t(tau, t as f64), h_list, exec)?;
            if reports.iter().all(InequalityReport::passed) {
                return Ok(Calibration {
                    tau,
                    t: t as f64,
                    reports,
                });
            }
            last_failure = describe_failure(&reports);
        }
    }
    Err(Error::CalibrationFailed(last_failure))
}

fn describe_failure(reports: &[InequalityReport]) -> String {
    for r in reports {
        if let Some(&(x, m)) = r.failures.first() {
            let regions: Vec<&str> = r.failed_regions().iter().map(|g| g.label()).collect();
            return format!(
                "h = {:e}: region(s) {} fail, first at r = {x:e} (margin {m:e})",
                r.h,
                regions.join(", ")
            );
        }
    }
    String::from("no failure recorded")
}

/// Settings for [`empirical_h_threshold`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ThresholdSearch {
    /// Smallest `h` tested.
    pub h_floor: f64,
    /// Scan density in `log10 h`.
    pub points_per_decade: u32,
    /// Significant digits of the reported threshold.
    pub digits: u32,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            h_floor: 1e-80,
            points_per_decade: 2,
            digits: 2,
        }
    }
}

/// Result of [`empirical_h_threshold`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Threshold {
    pub h: f64,
    /// `(h, passed)` for every scanned and bisected `h`, ascending.
    pub tested: Vec<(f64, bool)>,
    /// The top of the admissible range passed.
    pub at_top: bool,
}

fn round_down_sig(x: f64, digits: u32) -> f64 {
    let e = math::floor(math::log10(x));
    let scale = math::powf(10.0, e - (digits as f64 - 1.0));
    let v = math::floor(x / scale * (1.0 + 1e-12)) * scale;
    if v > 0.0 {
        v
    } else {
        x
    }
}

/// Largest `h` such that the inequality holds at every scanned `h′ ≤ h`,
/// refined by bisection in `log h`.
pub fn empirical_h_threshold<E: Executor>(
    case: &Case,
    search: &ThresholdSearch,
    exec: &E,
) -> Result<Threshold> {
    let h_max = case.h_max();
    if !(search.h_floor > 0.0 && search.h_floor < h_max) {
        return Err(Error::Config(format!(
            "threshold floor {} must lie in (0, {h_max})",
            search.h_floor
        )));
    }
    let l0 = math::log10(search.h_floor);
    let l1 = math::log10(h_max);
    let n = math::ceil((l1 - l0) * search.points_per_decade.max(1) as f64).max(1.0) as usize;
    let scan: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                h_max
            } else {
                math::powf(10.0, l0 + (l1 - l0) * i as f64 / n as f64)
            }
        })
        .collect();
    let passed: Vec<bool> = exec
        .map(&scan, |&h| case.verify(h).map(|r| r.passed()))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut tested: Vec<(f64, bool)> = scan.iter().copied().zip(passed.iter().copied()).collect();
    let first_fail = passed.iter().position(|p| !p);
    let threshold = match first_fail {
        Some(0) => {
            return Err(Error::ThresholdNotFound {
                h_min: search.h_floor,
                h_max,
            })
        }
        None => {
            return Ok(Threshold {
                h: h_max,
                tested,
                at_top: true,
            })
        }
        Some(i) => {
            let (mut lo, mut hi) = (math::ln(scan[i - 1]), math::ln(scan[i]));
            let rel = 0.5 * math::powf(10.0, -(search.digits as f64));
            while hi - lo > rel {
                let mid = 0.5 * (lo + hi);
                let ok = case.verify(math::exp(mid))?.passed();
                tested.push((math::exp(mid), ok));
                if ok {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let h = round_down_sig(math::exp(lo), search.digits);
            if h != math::exp(lo) && !case.verify(h)?.passed() {
                math::exp(lo)
            } else {
                h
            }
        }
    };
    tested.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Threshold {
        h: threshold,
        tested,
        at_top: false,
    })
}

/// Empirical constants of the `w` bounds at one `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WLemmaRow {
    pub h: f64,
    /// `log(sup w / h^{-2-2M})` (δ > 0) or `log(sup w / h^{-2M})` (δ = 0).
    pub ln_c_w: f64,
    /// Smallest `C ≥ 0` with `w′ r^{1+η} (log h^{-1})^C ≥ 1` on the grid beyond `a`.
    pub c_wprime: f64,
    /// `log sup_r [(w²/w′)/(h^{-2-2M} r^{1+η})] / log log h^{-1}`.
    pub c_ratio: f64,
    /// Minimum of `q` on the grid beyond `a`.
    pub q_min: f64,
}

/// Empirical constants over an `h` sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WLemmaReport {
    pub rows: Vec<WLemmaRow>,
    pub c_w_bounded: bool,
    pub c_wprime_bounded: bool,
    pub c_ratio_bounded: bool,
    pub q_nonnegative: bool,
}

impl WLemmaReport {
    pub fn passed(&self) -> bool {
        self.c_w_bounded && self.c_wprime_bounded && self.c_ratio_bounded && self.q_nonnegative
    }
}

/// Lemma constants for one weight/phase instance.
pub fn w_lemma_row(wp: &WeightPhase, grid: &GridSpec) -> WLemmaRow {
    let l = wp.scales.log_inv_h();
    let ll = math::ln(l);
    let m = wp.scales.m;
    let eta = wp.scales.eta;
    let power = match DeltaCase::of(wp.scales.delta) {
        DeltaCase::Zero => 2.0 * m,
        _ => 2.0 + 2.0 * m,
    };
    let ln_c_w = wp.ln_w_sup() - power * l;
    let mut c_wprime: f64 = 0.0;
    let mut ln_ratio = f64::NEG_INFINITY;
    let mut q_min = f64::INFINITY;
    for r in grid.points(wp) {
        let lr = math::ln(r);
        let lw = wp.ln_w(r);
        let lwp = wp.ln_w_prime(r);
        ln_ratio = ln_ratio.max(2.0 * lw - lwp - (2.0 + 2.0 * m) * l - (1.0 + eta) * lr);
        if lr > wp.log_a() {
            c_wprime = c_wprime.max(-(lwp + (1.0 + eta) * lr) / ll);
            q_min = q_min.min(wp.q(r));
        }
    }
    WLemmaRow {
        h: wp.scales.h,
        ln_c_w,
        c_wprime,
        c_ratio: ln_ratio / ll,
        q_min,
    }
}

/// Whether a sequence of empirical constants looks bounded.
///
/// `values` holds `(log h^{-1}, C)`. Passes when the maximum is not at the
/// smallest `h`, or when each step towards smaller `h` grows by at most the
/// factor `(L_{i+1}/L_i)^{0.1}`.
pub fn sequence_bounded(values: &[(f64, f64)]) -> bool {
    if values.len() < 2 {
        return true;
    }
    let mut v: Vec<(f64, f64)> = values.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    if v.iter().any(|p| !p.1.is_finite()) {
        return false;
    }
    let argmax = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if argmax != v.len() - 1 {
        return true;
    }
    v.windows(2).all(|w| {
        let (l0, c0) = w[0];
        let (l1, c1) = w[1];
        c1 <= c0.max(0.0) * math::powf(l1 / l0, 0.1) + 1e-9 * c0.abs().max(1.0)
    })
}

/// Empirical `w` lemma constants over `h_list`.
pub fn verify_w_lemma<E: Executor>(case: &Case, h_list: &[f64], exec: &E) -> Result<WLemmaReport> {
    let rows: Vec<WLemmaRow> = exec
        .map(h_list, |&h| case.weight_phase(h).map(|wp| w_lemma_row(&wp, &case.grid)))
        .into_iter()
        .collect::<Result<_>>()?;
    let series = |f: fn(&WLemmaRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (-math::ln(r.h), f(r))).collect()
    };
    Ok(WLemmaReport {
        c_w_bounded: sequence_bounded(&series(|r| math::exp(r.ln_c_w))),
        c_wprime_bounded: sequence_bounded(&series(|r| r.c_wprime)),
        c_ratio_bounded: sequence_bounded(&series(|r| r.c_ratio)),
        q_nonnegative: rows.iter().all(|r| r.q_min >= -1e-12),
        rows,
    })
}

/// `sup φ₀` over an `h` sweep and its log–log fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseScaling {
    pub series: Vec<(f64, f64)>,
    pub fit: Fit,
    /// `q` held fixed in the first pass.
    pub q_model: f64,
}

/// Theoretical `log h^{-1}` power of `sup φ₀` per regime.
pub fn phase_q_model(params: &PotentialParams, cp: &ConstructionParams) -> f64 {
    match DeltaCase::of(params.delta) {
        DeltaCase::One => 1.0,
        DeltaCase::Between => 1.0 + cp.eps_exponent,
        DeltaCase::Zero => 1.0 + cp.rho_tilde,
    }
}

/// Fits `sup φ₀ ≈ c h^{-p} (log h^{-1})^q`: `p` with `q` held at the model
/// value, then `q` refit at that `p`.
pub fn phase_scaling_fit<E: Executor>(case: &Case, h_list: &[f64], exec: &E) -> Result<PhaseScaling> {
    if h_list.len() < 8 {
        return Err(Error::Config("phase scaling needs at least 8 h values".into()));
    }
    let lo = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = h_list.iter().copied().fold(0.0, f64::max);
    if hi / lo < 100.0 {
        return Err(Error::Config("phase scaling h values must span two decades".into()));
    }
    let series: Vec<(f64, f64)> = exec
        .map(h_list, |&h| {
            let wp = case.weight_phase_with(h, false)?;
            Ok((h, wp.phi0_sup()?.total))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let q_model = phase_q_model(&case.params, &case.construction);
    let fit = fit_report(&series, FitModel::TwoPass { q0: q_model })?;
    Ok(PhaseScaling {
        series,
        fit,
        q_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::potential::benchmark_potential;
    use crate::scales::default_construction;

    fn case(delta: f64, beta: f64, c: f64) -> Case {
        let p = PotentialParams::with_defaults(3, beta, c, delta, c, 1.5, c);
        let cp = default_construction(delta, beta, 1.5, 0.7).unwrap();
        Case::new(p, cp)
    }

    #[test]
    fn free_potential_passes_uncalibrated() {
        let mut c = case(1.0, 0.0, 0.0);
        c.params = PotentialParams::free(3, 1.0);
        for &h in &[1e-3, 1e-10, 1e-40] {
            let r = c.verify(h).unwrap();
            assert!(r.passed(), "h = {h}: {:?}", r.failures.first());
            assert!(r.min_margin >= 0.0, "h = {h}: min margin {}", r.min_margin);
        }
    }

    #[test]
    fn free_bracket_below_one_is_e_plus_phi_prime_squared() {
        let mut c = case(1.0, 0.0, 0.0);
        c.params = PotentialParams::free(3, 1.0);
        let wp = c.weight_phase(1e-6).unwrap();
        let dphi = wp.phi_prime(0.3);
        let b = bracket_eval(&wp, 0.3, &Mode::Envelope).unwrap();
        assert!((b - (1.0 + dphi * dphi)).abs() < 1e-12 * b);
    }

    #[test]
    fn kinks_are_domain_errors() {
        let wp = case(1.0, 1.0, 1.0).weight_phase(1e-6).unwrap();
        assert!(bracket_eval(&wp, 1.0, &Mode::Envelope).unwrap_err().is_config());
        assert!(bracket_eval(&wp, wp.a(), &Mode::Envelope).is_err());
    }

    #[test]
    fn inner_bracket_dominates_closed_form() {
        let c = case(1.0, 1.0, 1.0).with_tau_t(4.0, 1.0);
        let wp = c.weight_phase(1e-8).unwrap();
        for i in 0..200 {
            let r = 10f64.powf(-4.0 + 4.0 * i as f64 / 200.0);
            let b = bracket_eval(&wp, r, &Mode::Envelope).unwrap();
            let cf = inner_closed_form(&wp, r);
            assert!(b >= cf - 1e-12 * cf.abs(), "r = {r}: {b} < {cf}");
        }
    }

    #[test]
    fn ab_examples_zero_potential() {
        let mut c = case(1.0, 0.0, 0.0);
        c.params = PotentialParams::free(3, 1.0);
        let wp = c.weight_phase(1e-4).unwrap();
        let ab = ab_eval(&wp, 0.4, &RadialPotential::zero()).unwrap();
        assert_eq!(ab.b, 0.0);
        let dphi = wp.phase_scale();
        let expect = 2.0 * 0.4 * (1.0 + dphi * dphi);
        assert!((ab.a - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn negative_control_fails_inner() {
        let c = case(1.0, 1.4, 10.0);
        let r = c.verify(1e-6).unwrap();
        assert!(!r.region_passed(Region::Inner));
    }

    #[test]
    fn combined_form_is_never_smaller() {
        let c = case(0.5, 1.0, 1.0).with_tau_t(2.0, 1.0);
        let wp = c.weight_phase(1e-9).unwrap();
        for r in c.grid.points(&wp) {
            let b = bracket_parts(&wp, r, &Mode::Envelope).unwrap();
            assert!(b.combined >= b.separated - 1e-12 * b.separated.abs().max(1.0));
        }
    }

    #[test]
    fn concrete_benchmark_margin_dominates_envelope() {
        let c = case(1.0, 1.0, 1.0).with_tau_t(4.0, 1.0);
        let v = benchmark_potential(&c.params);
        let wp = c.weight_phase(1e-5).unwrap();
        let mode = Mode::Concrete { potential: v.clone() };
        for r in c.grid.points(&wp).into_iter().step_by(7) {
            let env = bracket_eval(&wp, r, &Mode::Envelope).unwrap();
            let conc = bracket_eval(&wp, r, &mode).unwrap();
            let ab = ab_eval(&wp, r, &v).unwrap();
            let exact = ab.a_unit - (1.0 + wp.cp.gamma) * ab.b_unit;
            let tol = 1e-9 * exact.abs().max(1.0);
            assert!(conc >= env - tol, "r = {r}");
            assert!(exact >= conc - tol, "r = {r}: {exact} < {conc}");
        }
    }

    #[test]
    fn calibrate_free_is_trivial() {
        let mut c = case(1.0, 0.0, 0.0);
        c.params = PotentialParams::free(3, 1.0);
        let cal = calibrate(&c, &[1e-5, 1e-20], &CalibrationSearch::default(), &Sequential).unwrap();
        assert_eq!((cal.tau, cal.t), (1.0, 1.0));
    }

    #[test]
    fn sequence_bounded_heuristic() {
        assert!(sequence_bounded(&[(2.0, 1.0), (4.0, 3.0), (8.0, 2.0)]));
        assert!(sequence_bounded(&[(2.0, 1.0), (4.0, 1.0), (8.0, 1.0)]));
        assert!(!sequence_bounded(&[(2.0, 1.0), (4.0, 2.0), (8.0, 4.0)]));
        assert!(sequence_bounded(&[(2.0, 1.0), (4.0, 1.05)]));
    }

    #[test]
    fn round_down_two_digits() {
        assert_eq!(round_down_sig(0.012345, 2), 0.012);
        assert!((round_down_sig(3.99e-7, 2) - 3.9e-7).abs() < 1e-20);
    }
}
