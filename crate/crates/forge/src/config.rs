//! JSON run configuration. Every field has a default, so `{}` is a valid
//! config (the δ = 1 benchmark with all campaigns).

use std::path::PathBuf;

use carleman_core::potential::{ChiFamily, Component, PotentialParams, RadialFamily};
use carleman_core::resolvent::ResolventConfig;
use carleman_core::scales::{default_construction, max_admissible_h, ConstructionParams};
use carleman_core::verifier::{GridSpec, ThresholdSearch};
use serde::{Deserialize, Serialize};

use crate::error::ForgeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Campaign {
    Validate,
    VerifyInequality,
    VerifyLemmas,
    PhaseScaling,
    ResolventSweep,
    CarlemanCheck,
    All,
}

impl Campaign {
    pub const ORDER: [Campaign; 6] = [
        Campaign::Validate,
        Campaign::VerifyInequality,
        Campaign::VerifyLemmas,
        Campaign::PhaseScaling,
        Campaign::ResolventSweep,
        Campaign::CarlemanCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Campaign::Validate => "validate",
            Campaign::VerifyInequality => "verify-inequality",
            Campaign::VerifyLemmas => "verify-lemmas",
            Campaign::PhaseScaling => "phase-scaling",
            Campaign::ResolventSweep => "resolvent-sweep",
            Campaign::CarlemanCheck => "carleman-check",
            Campaign::All => "all",
        }
    }

    /// Campaigns to run, in dependency order.
    pub fn expand(self) -> Vec<Campaign> {
        match self {
            Campaign::All => Self::ORDER.to_vec(),
            c => vec![c],
        }
    }

    /// Needs a calibrated weight/phase case.
    pub fn needs_case(self) -> bool {
        matches!(
            self,
            Campaign::VerifyInequality
                | Campaign::VerifyLemmas
                | Campaign::PhaseScaling
                | Campaign::CarlemanCheck
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "log_spacing")]
    pub spacing: Spacing,
}

fn log_spacing() -> Spacing {
    Spacing::Log
}

impl HGrid {
    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn check(&self, what: &str) -> Result<(), ForgeError> {
        if !(self.min > 0.0 && self.max < 1.0 && self.min <= self.max) {
            return Err(ForgeError::Config(format!(
                "{what}: h grid [{}, {}] must satisfy 0 < min <= max < 1",
                self.min, self.max
            )));
        }
        if self.points == 0 || (self.points == 1 && self.min != self.max) {
            return Err(ForgeError::Config(format!("{what}: h grid needs points >= 2")));
        }
        Ok(())
    }

    /// Grid values, ascending.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / n;
                if i + 1 == self.points {
                    return self.max;
                }
                match self.spacing {
                    Spacing::Log => (self.min.ln() + t * (self.max / self.min).ln()).exp(),
                    Spacing::Linear => self.min + t * (self.max - self.min),
                }
            })
            .collect()
    }
}

/// Potential constants; profiles left out take the defaults for `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub n: u32,
    pub beta: f64,
    pub c0: f64,
    pub delta: f64,
    pub c_s: f64,
    pub rho: f64,
    pub c_l: f64,
    pub b: Option<f64>,
    pub p_exponent: Option<f64>,
    pub m_l: Option<RadialFamily>,
    pub m_s: Option<RadialFamily>,
    pub y: Option<RadialFamily>,
    pub chi: Option<ChiFamily>,
    /// Concrete potential; the envelope is used when absent.
    pub concrete: Option<Vec<Component>>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            n: 3,
            beta: 1.0,
            c0: 1.0,
            delta: 1.0,
            c_s: 1.0,
            rho: 2.0,
            c_l: 1.0,
            b: None,
            p_exponent: None,
            m_l: None,
            m_s: None,
            y: None,
            chi: None,
            concrete: None,
        }
    }
}

impl PotentialSection {
    pub fn params(&self) -> PotentialParams {
        let mut p = PotentialParams::with_defaults(
            self.n, self.beta, self.c0, self.delta, self.c_s, self.rho, self.c_l,
        );
        p.b = self.b;
        if let Some(x) = self.p_exponent {
            p.p_exponent = x;
        }
        if let Some(f) = self.m_l {
            p.m_l = f;
        }
        if let Some(f) = self.m_s {
            p.m_s = f;
        }
        if let Some(f) = self.y {
            p.y = f;
        }
        if let Some(c) = self.chi {
            p.chi = c;
        }
        p
    }
}

/// Overrides of the case defaults of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructionSection {
    pub eps_exponent: f64,
    pub rho_tilde: Option<f64>,
    pub gamma: Option<f64>,
    /// Fixing `tau` skips calibration.
    pub tau: Option<f64>,
    pub t: Option<f64>,
    pub kappa: Option<f64>,
    #[serde(rename = "T")]
    pub big_t: Option<f64>,
    #[serde(rename = "E_min")]
    pub e_min: Option<f64>,
    #[serde(rename = "E_max")]
    pub e_max: Option<f64>,
}

impl Default for ConstructionSection {
    fn default() -> Self {
        Self {
            eps_exponent: 0.7,
            rho_tilde: None,
            gamma: None,
            tau: None,
            t: None,
            kappa: None,
            big_t: None,
            e_min: None,
            e_max: None,
        }
    }
}

impl ConstructionSection {
    pub fn build(&self, p: &PotentialSection) -> Result<ConstructionParams, ForgeError> {
        let mut cp = default_construction(p.delta, p.beta, p.rho, self.eps_exponent)?;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(x) = v {
                *slot = x;
            }
        };
        set(&mut cp.rho_tilde, self.rho_tilde);
        set(&mut cp.gamma, self.gamma);
        set(&mut cp.tau, self.tau);
        set(&mut cp.t, self.t);
        set(&mut cp.kappa, self.kappa);
        set(&mut cp.big_t, self.big_t);
        set(&mut cp.e_min, self.e_min);
        set(&mut cp.e_max, self.e_max);
        cp.check(p.beta, p.rho)?;
        Ok(cp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// `h` values at which the calibrated inequality must hold.
    pub h_grid: HGrid,
    pub max_tau_exponent: u32,
    pub max_t: u32,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            h_grid: HGrid::log(1e-80, 1e-20, 8),
            max_tau_exponent: 20,
            max_t: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitySection {
    pub threshold: ThresholdSearch,
    /// Explicit `h` values; by default `below_threshold_points` values
    /// log-spaced over `below_threshold_decades` decades ending at the
    /// empirical threshold.
    pub h_grid: Option<HGrid>,
    pub below_threshold_points: usize,
    pub below_threshold_decades: f64,
}

impl Default for InequalitySection {
    fn default() -> Self {
        Self {
            threshold: ThresholdSearch::default(),
            h_grid: None,
            below_threshold_points: 10,
            below_threshold_decades: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSection {
    /// Defaults to the inequality grid.
    pub h_grid: Option<HGrid>,
    pub sandwich_points: usize,
    pub sandwich_r_max: f64,
    /// Relative jump allowed in `w` and `φ₀` across a kink.
    pub continuity_tol: f64,
    /// Relative offset of the one-sided kink evaluations.
    pub continuity_offset: f64,
    pub fd_points: usize,
    /// Central-difference step relative to `r`.
    pub fd_step: f64,
    pub fd_tol: f64,
    /// Points within this distance of a kink in `log r` are skipped.
    pub fd_kink_exclusion: f64,
    /// Slack on `q ≥ 0` beyond `a`.
    pub q_tol: f64,
}

impl Default for LemmaSection {
    fn default() -> Self {
        Self {
            h_grid: None,
            sandwich_points: 1000,
            sandwich_r_max: 1e6,
            continuity_tol: 1e-10,
            continuity_offset: 1e-13,
            fd_points: 400,
            fd_step: 1e-4,
            fd_tol: 1e-6,
            fd_kink_exclusion: 1e-3,
            q_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub h_grid: HGrid,
    /// Expected `p`; the regime value when absent.
    pub expected_p: Option<f64>,
    /// Accepted `|p − expected|`; 0.05 at δ ∈ {0, 1} and 0.1 in between when absent.
    pub tolerance: Option<f64>,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            h_grid: HGrid::log(1e-6, 1e-2, 12),
            expected_p: None,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventSection {
    /// `ε = h` at each point.
    pub h_grid: HGrid,
    pub solver: ResolventConfig,
}

impl Default for ResolventSection {
    fn default() -> Self {
        Self {
            h_grid: HGrid::log(0.05, 0.4, 8),
            solver: ResolventConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanSection {
    /// Defaults to 8 log-spaced values over `[10⁻³, min(10⁻¹, h_max)]`.
    pub h_grid: Option<HGrid>,
    /// Angular eigenvalue of the sector.
    pub nu: f64,
    pub t0: f64,
    pub alpha_beta: Vec<f64>,
    /// Allowed relative step between consecutive sweep points after the first three.
    pub growth_rel: f64,
}

impl Default for CarlemanSection {
    fn default() -> Self {
        Self {
            h_grid: None,
            nu: 0.0,
            t0: -0.25,
            alpha_beta: vec![0.5, 1.0, 2.0],
            growth_rel: 0.1,
        }
    }
}

impl CarlemanSection {
    pub fn grid(&self, delta: f64) -> HGrid {
        self.h_grid
            .unwrap_or_else(|| HGrid::log(1e-3, max_admissible_h(delta).min(0.1), 8))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    pub dump_weights: bool,
    pub dump_margins: bool,
    pub dump_modes: bool,
    /// Radial points per `h` in weight dumps.
    pub weight_points: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("forge-out"),
            formats: vec![Format::Csv, Format::Json],
            dump_weights: false,
            dump_margins: false,
            dump_modes: false,
            weight_points: 512,
        }
    }
}

impl OutputSection {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub campaign: Campaign,
    pub potential: PotentialSection,
    pub construction: ConstructionSection,
    pub grid: GridSpec,
    pub calibration: CalibrationSection,
    pub inequality: InequalitySection,
    pub lemmas: LemmaSection,
    pub phase_scaling: PhaseSection,
    pub resolvent: ResolventSection,
    pub carleman: CarlemanSection,
    pub output: OutputSection,
    /// Worker threads; `--jobs` and `CARLEMAN_FORGE_JOBS` take precedence.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            campaign: Campaign::All,
            potential: PotentialSection::default(),
            construction: ConstructionSection::default(),
            grid: GridSpec::default(),
            calibration: CalibrationSection::default(),
            inequality: InequalitySection::default(),
            lemmas: LemmaSection::default(),
            phase_scaling: PhaseSection::default(),
            resolvent: ResolventSection::default(),
            carleman: CarlemanSection::default(),
            output: OutputSection::default(),
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ForgeError> {
        serde_json::from_str(text).map_err(|e| ForgeError::Config(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ForgeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ForgeError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural checks that do not depend on the potential being admissible.
    pub fn check(&self) -> Result<(), ForgeError> {
        self.calibration.h_grid.check("calibration")?;
        if let Some(g) = &self.inequality.h_grid {
            g.check("inequality")?;
        }
        if self.inequality.below_threshold_points == 0 || !(self.inequality.below_threshold_decades > 0.0) {
            return Err(ForgeError::Config(
                "inequality: below_threshold_points and below_threshold_decades must be positive".into(),
            ));
        }
        if let Some(g) = &self.lemmas.h_grid {
            g.check("lemmas")?;
        }
        self.phase_scaling.h_grid.check("phase_scaling")?;
        self.resolvent.h_grid.check("resolvent")?;
        self.resolvent.solver.check()?;
        self.carleman.grid(self.potential.delta).check("carleman")?;
        if !(self.carleman.t0 > -0.5 && self.carleman.t0 < 0.0) {
            return Err(ForgeError::Config(format!(
                "carleman: t0 = {} must lie in (-1/2, 0)",
                self.carleman.t0
            )));
        }
        if self.carleman.alpha_beta.is_empty() || self.carleman.alpha_beta.iter().any(|&a| !(a > 0.0)) {
            return Err(ForgeError::Config("carleman: alpha_beta must be positive and non-empty".into()));
        }
        self.grid.check()?;
        if self.output.formats.is_empty() {
            return Err(ForgeError::Config("output: formats must not be empty".into()));
        }
        if self.jobs == Some(0) {
            return Err(ForgeError::Config("jobs must be >= 1".into()));
        }
        Ok(())
    }
}
