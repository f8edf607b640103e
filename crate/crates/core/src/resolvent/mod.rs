//! Radial angular-momentum sectors of `P(h) − E ∓ iε`, weighted resolvent
//! norms and the numerical checks of the energy identity and Carleman-type
//! estimates.
//!
//! Each sector is the half-line operator `−h²∂_r² + h²ν/r² + V − E ∓ iε`,
//! discretised by the three-point stencil on `{jR/N}` with Dirichlet
//! conditions at `r = 0` and `r = R`.

pub mod carleman;
pub mod energy;
pub mod norm;
pub mod tridiag;

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fit::{fit_report, Fit, FitModel};
use crate::math;
use crate::potential::RadialPotential;
use crate::scales::DeltaCase;
use crate::verifier::sequence_bounded;

pub use norm::{EigEstimate, IterConfig, Method};
pub use tridiag::TridiagLu;

/// Sign of the absorption term: `P − E + iε` or `P − E − iε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sign {
    #[cfg_attr(feature = "serde", serde(rename = "+"))]
    Plus,
    #[cfg_attr(feature = "serde", serde(rename = "-"))]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// One angular sector of the discretised operator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialOperatorSpec {
    pub n: u32,
    pub nu: f64,
    pub h: f64,
    pub energy: f64,
    pub epsilon: f64,
    pub s: f64,
    /// Truncation radius.
    pub r_max: f64,
    /// Number of grid intervals.
    pub grid: usize,
    pub sign: Sign,
}

impl RadialOperatorSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.nu >= -0.25 - 1e-15) {
            return Err(Error::Config(format!("nu = {} < -1/4", self.nu)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(self.h > 0.0) || !(self.energy > 0.0) {
            return Err(Error::Config("h and E must be positive".into()));
        }
        if !(self.s > 0.5) {
            return Err(Error::Config(format!("s = {} must exceed 1/2", self.s)));
        }
        if !(self.r_max > 0.0) {
            return Err(Error::Config("truncation radius must be positive".into()));
        }
        if self.grid < 256 {
            return Err(Error::Config(format!("grid N = {} below 256", self.grid)));
        }
        Ok(())
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.grid as f64
    }

    /// Interior nodes `r_j = jR/N`, `j = 1..N−1`.
    pub fn nodes(&self) -> Vec<f64> {
        let dr = self.dr();
        (1..self.grid).map(|j| j as f64 * dr).collect()
    }
}

/// `ν_ℓ = ℓ(ℓ+n−2) + (n−1)(n−3)/4` for `ℓ = 0..=ell_max`.
pub fn angular_eigenvalues(n: u32, ell_max: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Config(format!("dimension n = {n} must be >= 2")));
    }
    let nf = n as f64;
    Ok((0..=ell_max)
        .map(|l| {
            let l = l as f64;
            l * (l + nf - 2.0) + (nf - 1.0) * (nf - 3.0) / 4.0
        })
        .collect())
}

/// Tridiagonal matrix with complex bands and the weights of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
    /// Nodes the rows correspond to (used for the weights `⟨r⟩^{-s}`).
    pub nodes: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }
}

/// Assembles `−h²D² + h²ν/r² + V − E ∓ iε` on the interior nodes.
pub fn discretize(spec: &RadialOperatorSpec, v: &RadialPotential) -> Result<TridiagonalOperator> {
    spec.check()?;
    let nodes = spec.nodes();
    let dr = spec.dr();
    let h2 = spec.h * spec.h;
    let off = Complex64::new(-h2 / (dr * dr), 0.0);
    let shift = Complex64::new(-spec.energy, spec.sign.value() * spec.epsilon);
    let mut diag = Vec::with_capacity(nodes.len());
    for &r in &nodes {
        let d = 2.0 * h2 / (dr * dr) + h2 * spec.nu / (r * r) + v.value(r);
        if !d.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite diagonal entry at r = {r} (discretisation)"
            )));
        }
        diag.push(Complex64::new(d, 0.0) + shift);
    }
    let m = nodes.len();
    Ok(TridiagonalOperator {
        sub: alloc::vec![off; m - 1],
        diag,
        sup: alloc::vec![off; m - 1],
        nodes,
    })
}

/// `‖D A⁻¹ D‖` with `D = diag(⟨r_j⟩^{-s})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `⟨r⟩^{-s}`
pub fn japanese_weight(r: f64, s: f64) -> f64 {
    math::powf(1.0 + r * r, -0.5 * s)
}

/// Largest singular value of `D A⁻¹ D` from the eigenvalues of its normal map.
pub fn weighted_norm(op: &TridiagonalOperator, s: f64, cfg: &IterConfig) -> Result<NormEstimate> {
    let lu = TridiagLu::factor(&op.sub, &op.diag, &op.sup)?;
    let d: Vec<f64> = op.nodes.iter().map(|&r| japanese_weight(r, s)).collect();
    let n = op.len();
    let mut tmp = alloc::vec![Complex64::new(0.0, 0.0); n];
    let normal = |x: &[Complex64], y: &mut [Complex64]| {
        for i in 0..n {
            tmp[i] = x[i] * d[i];
        }
        lu.solve(&mut tmp);
        for i in 0..n {
            tmp[i] *= d[i] * d[i];
        }
        lu.solve_adjoint(&mut tmp);
        for i in 0..n {
            y[i] = tmp[i] * d[i];
        }
    };
    let e = norm::largest_eigenvalue(n, normal, cfg);
    Ok(NormEstimate {
        value: math::sqrt(e.value.max(0.0)),
        iterations: e.iterations,
        converged: e.converged,
    })
}

/// Smallest `ℓ` with `h²ν_ℓ/r² + V(r) − E ≥ E` at every node of `(0, R]`.
pub fn mode_cutoff(spec: &RadialOperatorSpec, v: &RadialPotential) -> Result<usize> {
    if spec.n < 2 {
        return Err(Error::Config("dimension must be >= 2".into()));
    }
    let h2 = spec.h * spec.h;
    let mut need: f64 = f64::NEG_INFINITY;
    let dr = spec.r_max / spec.grid.max(1) as f64;
    for j in 1..=spec.grid {
        let r = j as f64 * dr;
        need = need.max((2.0 * spec.energy - v.value(r)) * r * r / h2);
    }
    let nf = spec.n as f64;
    let c0 = (nf - 1.0) * (nf - 3.0) / 4.0;
    // Solve ℓ² + (n−2)ℓ + c0 ≥ need.
    let disc = (nf - 2.0) * (nf - 2.0) / 4.0 + (need - c0);
    if disc <= 0.0 {
        return Ok(0);
    }
    let mut l = math::ceil(math::sqrt(disc) - 0.5 * (nf - 2.0)).max(0.0) as usize;
    let nu = |l: usize| -> f64 {
        let lf = l as f64;
        lf * (lf + nf - 2.0) + c0
    };
    while l > 0 && nu(l - 1) >= need {
        l -= 1;
    }
    while nu(l) < need {
        l += 1;
    }
    Ok(l)
}

/// How `g` is computed at one `(h, ε)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ResolventConfig {
    pub n: u32,
    pub s: f64,
    pub energy: f64,
    pub sign: Sign,
    /// Lower bound on the truncation radius.
    pub r_min: f64,
    /// Truncation tolerance: `R ≥ 4 (h√E/ε) log(1/tol)`.
    pub truncation_tol: f64,
    /// Grid points per local wavelength.
    pub points_per_wavelength: f64,
    /// Relative agreement demanded between `N` and `2N`.
    pub grid_tol: f64,
    /// Grid doublings allowed to reach `grid_tol`.
    pub max_doublings: u32,
    /// `N` and `2N` disagreeing by more than this is a resolution error.
    pub resolution_limit: f64,
    /// Re-run the dominant mode with `2R` and report the change.
    pub check_radius: bool,
    pub iter: IterConfig,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self {
            n: 3,
            s: 1.0,
            energy: 1.0,
            sign: Sign::Plus,
            r_min: 20.0,
            truncation_tol: 1e-3,
            points_per_wavelength: 24.0,
            grid_tol: 1e-3,
            max_doublings: 4,
            resolution_limit: 1e-2,
            check_radius: true,
            iter: IterConfig::default(),
        }
    }
}

impl ResolventConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.s > 0.5) {
            return Err(Error::Config(format!("s = {} must exceed 1/2", self.s)));
        }
        if self.n < 2 {
            return Err(Error::Config("dimension must be >= 2".into()));
        }
        if !(self.energy > 0.0) {
            return Err(Error::Config("E must be positive".into()));
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol < 1.0) {
            return Err(Error::Config("truncation_tol must lie in (0, 1)".into()));
        }
        if !(self.points_per_wavelength >= 4.0) {
            return Err(Error::Config("points_per_wavelength must be >= 4".into()));
        }
        Ok(())
    }

    /// `R = max(r_min, 4 (h√E/ε) log(1/tol))`.
    pub fn radius(&self, h: f64, epsilon: f64) -> f64 {
        let damping = 4.0 * h * math::sqrt(self.energy) / epsilon * math::ln(1.0 / self.truncation_tol);
        self.r_min.max(damping)
    }

    /// Initial `N` from the largest local wavenumber on the grid.
    pub fn initial_grid(&self, h: f64, r_max: f64, v: &RadialPotential) -> usize {
        // Sample V coarsely for its minimum; the singular head is repulsive
        // or bounded below by the node spacing of the final grid.
        let mut vmin: f64 = 0.0;
        for j in 1..=4096 {
            let r = r_max * j as f64 / 4096.0;
            vmin = vmin.min(v.value(r));
        }
        let k = math::sqrt(self.energy - vmin) / h;
        let wavelength = 2.0 * core::f64::consts::PI / k;
        let n = math::ceil(self.points_per_wavelength * r_max / wavelength) as usize;
        n.max(256)
    }
}

/// Per-mode norm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeNorm {
    pub ell: usize,
    pub nu: f64,
    pub norm: f64,
    pub converged: bool,
}

/// Result of [`g_estimate`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GEstimate {
    pub h: f64,
    pub epsilon: f64,
    pub g: f64,
    pub ell_star: usize,
    pub ell_max: usize,
    pub r_max: f64,
    pub grid: usize,
    /// `|g_N − g_{N/2}|/g_N` for the dominant mode at the accepted `N`.
    pub grid_change: f64,
    /// `|g(2R) − g(R)|/g(R)` for the dominant mode, when checked.
    pub radius_change: Option<f64>,
    /// Bound on modes beyond the cutoff: `1/E`.
    pub tail_bound: f64,
    pub modes: Vec<ModeNorm>,
}

fn mode_norm(
    cfg: &ResolventConfig,
    v: &RadialPotential,
    h: f64,
    epsilon: f64,
    nu: f64,
    r_max: f64,
    grid: usize,
) -> Result<NormEstimate> {
    let spec = RadialOperatorSpec {
        n: cfg.n,
        nu,
        h,
        energy: cfg.energy,
        epsilon,
        s: cfg.s,
        r_max,
        grid,
        sign: cfg.sign,
    };
    let op = discretize(&spec, v)?;
    weighted_norm(&op, cfg.s, &cfg.iter)
}

/// `g(h, ε) = max_ℓ ‖⟨r⟩^{-s}(P_ℓ − E ∓ iε)⁻¹⟨r⟩^{-s}‖` over the computed modes.
pub fn g_estimate<E: Executor>(
    cfg: &ResolventConfig,
    v: &RadialPotential,
    h: f64,
    epsilon: f64,
    exec: &E,
) -> Result<GEstimate> {
    cfg.check()?;
    if !(epsilon > 0.0 && epsilon <= h * (1.0 + 1e-12)) {
        return Err(Error::Config(format!("epsilon = {epsilon} must lie in (0, h = {h}]")));
    }
    let r_max = cfg.radius(h, epsilon);
    let mut grid = cfg.initial_grid(h, r_max, v);
    let template = RadialOperatorSpec {
        n: cfg.n,
        nu: 0.0,
        h,
        energy: cfg.energy,
        epsilon,
        s: cfg.s,
        r_max,
        grid,
        sign: cfg.sign,
    };
    let ell_max = mode_cutoff(&template, v)?;
    let nus = angular_eigenvalues(cfg.n, ell_max)?;
    let run_modes = |grid: usize| -> Result<Vec<ModeNorm>> {
        let idx: Vec<usize> = (0..nus.len()).collect();
        exec.map(&idx, |&l| {
            mode_norm(cfg, v, h, epsilon, nus[l], r_max, grid).map(|e| ModeNorm {
                ell: l,
                nu: nus[l],
                norm: e.value,
                converged: e.converged,
            })
        })
        .into_iter()
        .collect()
    };
    let dominant = |modes: &[ModeNorm]| -> ModeNorm {
        *modes
            .iter()
            .max_by(|a, b| a.norm.total_cmp(&b.norm))
            .expect("at least one mode")
    };
    // Grid refinement on the dominant mode.
    let mut modes = run_modes(grid)?;
    let mut top = dominant(&modes);
    let mut grid_change = f64::INFINITY;
    for _ in 0..=cfg.max_doublings {
        let fine = mode_norm(cfg, v, h, epsilon, top.nu, r_max, 2 * grid)?;
        grid_change = (fine.value - top.norm).abs() / fine.value;
        if grid_change <= cfg.grid_tol {
            break;
        }
        grid *= 2;
        modes = run_modes(grid)?;
        top = dominant(&modes);
    }
    if grid_change > cfg.resolution_limit {
        return Err(Error::Resolution {
            estimate: grid_change,
            limit: cfg.resolution_limit,
        });
    }
    let radius_change = if cfg.check_radius {
        let scale = 2.0;
        let far = mode_norm(
            cfg,
            v,
            h,
            epsilon,
            top.nu,
            scale * r_max,
            (scale * grid as f64) as usize,
        )?;
        Some((far.value - top.norm).abs() / top.norm)
    } else {
        None
    };
    Ok(GEstimate {
        h,
        epsilon,
        g: top.norm,
        ell_star: top.ell,
        ell_max,
        r_max,
        grid,
        grid_change,
        radius_change,
        tail_bound: 1.0 / cfg.energy,
        modes,
    })
}

/// Theoretical `(p, q)` of `log g ≲ h^{-p}(log h^{-1})^q` for one regime.
pub fn theorem_rate(delta: f64, eps_exponent: f64, rho_tilde: f64) -> (f64, f64) {
    match DeltaCase::of(delta) {
        DeltaCase::One => (4.0 / 3.0, 1.0),
        DeltaCase::Between => ((2.0 * delta + 2.0) / (2.0 * delta + 1.0) + eps_exponent, 0.0),
        DeltaCase::Zero => (2.0, 1.0 + rho_tilde),
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    pub h: f64,
    pub epsilon: f64,
    pub ell_star: usize,
    pub g: f64,
    pub log_g: f64,
    /// `h^{-p}(log h^{-1})^q` at the theorem's rate.
    pub bound_rate: f64,
    /// Running maximum of `log g / bound_rate` (largest `h` first).
    pub c_fit_running: f64,
}

/// Result of [`sweep_and_fit`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub estimates: Vec<GEstimate>,
    pub rate: (f64, f64),
    /// Fit of `log g` (points with `log g > 0` only).
    pub fit: Option<Fit>,
    pub c_fit: f64,
    /// Every `g ≤ (1 + 10⁻⁶)/ε`.
    pub cap_ok: bool,
    /// `C_fit` finite, the cap holds and `log g / rate` does not grow as `h`
    /// decreases.
    pub consistent: bool,
    /// Set when a `g_estimate` failed; `points` then holds the partial sweep.
    pub aborted: Option<alloc::string::String>,
}

/// Computes `g` at `ε = h` along `h_list` and tests it against the rate.
pub fn sweep_and_fit<E: Executor>(
    cfg: &ResolventConfig,
    v: &RadialPotential,
    rate: (f64, f64),
    h_list: &[f64],
    exec: &E,
) -> Result<SweepResult> {
    if h_list.len() < 6 {
        return Err(Error::Config("a sweep needs at least 6 h values".into()));
    }
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut estimates = Vec::new();
    let mut aborted = None;
    for &h in &hs {
        match g_estimate(cfg, v, h, h, exec) {
            Ok(e) => estimates.push(e),
            Err(e) => {
                aborted = Some(format!("h = {h}: {e}"));
                break;
            }
        }
    }
    let mut running: f64 = f64::NEG_INFINITY;
    let points: Vec<SweepPoint> = estimates
        .iter()
        .map(|e| {
            let l = -math::ln(e.h);
            let bound_rate = math::powf(e.h, -rate.0) * math::powf(l, rate.1);
            let log_g = math::ln(e.g);
            running = running.max(log_g / bound_rate);
            SweepPoint {
                h: e.h,
                epsilon: e.epsilon,
                ell_star: e.ell_star,
                g: e.g,
                log_g,
                bound_rate,
                c_fit_running: running,
            }
        })
        .collect();
    let positive: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.log_g > 0.0)
        .map(|p| (p.h, p.log_g))
        .collect();
    let fit = if positive.len() >= 4 {
        fit_report(&positive, FitModel::TwoPass { q0: rate.1 }).ok()
    } else {
        None
    };
    let c_fit = running;
    let cap_ok = points.iter().all(|p| p.g <= (1.0 + 1e-6) / p.epsilon);
    let ratios: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (-math::ln(p.h), p.log_g / p.bound_rate))
        .collect();
    let consistent = aborted.is_none() && c_fit.is_finite() && cap_ok && sequence_bounded(&ratios);
    Ok(SweepResult {
        points,
        estimates,
        rate,
        fit,
        c_fit,
        cap_ok,
        consistent,
        aborted,
    })
}
