//! Empirical constants of the global Carleman estimate and of the
//! near-origin estimate on single-mode test functions.
//!
//! Everything is written for `ũ = r^{(n−1)/2} v` on the half-line, so the
//! angular integral is 1 and `(P − E ± iε)v` becomes
//! `−h²ũ″ + h²ν/r² ũ + (V − E ± iε)ũ`.

use alloc::vec::Vec;
use core::cell::Cell;

use num_complex::Complex64;

use super::energy::{canonical_family, Envelope, Jet, SectorSpec, TestFunction};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::potential::RadialPotential;
use crate::quadrature::{integrate, QuadConfig};
use crate::verifier::Case;
use crate::weight::WeightPhase;

fn radial_residual(spec: &SectorSpec, v: &RadialPotential, r: f64, j: &Jet) -> Complex64 {
    let h2 = spec.h * spec.h;
    let shift = Complex64::new(v.value(r) - spec.energy, spec.sign.value() * spec.epsilon);
    -j.d2u * h2 + j.u * (h2 * spec.nu / (r * r)) + shift * j.u
}

fn quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 0.0,
        rel_tol: 1e-9,
        max_intervals: 20_000,
    }
}

/// `(P − E ± iε)ũ / ũ` for `ũ = A e^{ikr}`, from the log-derivatives of `A`.
fn residual_ratio(spec: &SectorSpec, v: &RadialPotential, f: &TestFunction, r: f64) -> (f64, Complex64) {
    let (ln_a, d1, d2) = f.envelope.log_derivs(r);
    let k = f.k;
    let h2 = spec.h * spec.h;
    let second = Complex64::new(d2 - k * k, 2.0 * k * d1);
    let ratio = -second * h2
        + Complex64::new(
            h2 * spec.nu / (r * r) + v.value(r) - spec.energy,
            spec.sign.value() * spec.epsilon,
        );
    (ln_a, ratio)
}

/// `log ∫_lo^hi e^{g(r)} dr` for integrands that may be sharply peaked.
///
/// `g` is sampled to find the region within `e^{-80}` of its maximum; only
/// that window is integrated, with a break at the sampled peak.
pub fn log_integral<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
    const SAMPLES: usize = 4096;
    let dx = (hi - lo) / SAMPLES as f64;
    let xs: Vec<f64> = (1..SAMPLES).map(|i| lo + dx * i as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let (imax, m) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if m == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !m.is_finite() {
        return Err(Error::Numeric("log-integrand is not finite".into()));
    }
    let keep = |v: f64| v > m - 80.0;
    let first = vals.iter().position(|&v| keep(v)).unwrap_or(imax);
    let last = vals.iter().rposition(|&v| keep(v)).unwrap_or(imax);
    let a = if first == 0 { lo } else { xs[first - 1] };
    let b = if last + 1 >= xs.len() { hi } else { xs[last + 1] };
    // Locate the peak between its sampled neighbours and measure the
    // distance over which g drops by 1 on each side; geometric breaks from
    // that scale outwards let the integrator see arbitrarily narrow peaks.
    let mut l = if imax == 0 { lo } else { xs[imax - 1] };
    let mut r = if imax + 1 >= xs.len() { hi } else { xs[imax + 1] };
    let gf = |x: f64| {
        let v = g(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
    for _ in 0..200 {
        if r - l <= 1e-15 * r.abs().max(1e-300) {
            break;
        }
        let x1 = r - ratio * (r - l);
        let x2 = l + ratio * (r - l);
        if gf(x1) < gf(x2) {
            l = x1;
        } else {
            r = x2;
        }
    }
    let peak = 0.5 * (l + r);
    let m = m.max(gf(peak));
    let drop_at = |edge: f64| -> f64 {
        if gf(edge) >= m - 1.0 {
            return (edge - peak).abs();
        }
        let (mut near, mut far) = (peak, edge);
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if mid == near || mid == far {
                break;
            }
            if gf(mid) >= m - 1.0 {
                near = mid;
            } else {
                far = mid;
            }
        }
        (far - peak).abs().max(1e-15 * peak.abs())
    };
    let mut cuts: Vec<f64> = breaks.to_vec();
    cuts.push(peak);
    for (edge, dir) in [(a, -1.0), (b, 1.0)] {
        let mut step = drop_at(edge);
        while step < (edge - peak).abs() {
            cuts.push(peak + dir * step);
            step *= 2.0;
        }
    }
    // The sampled maximum can sit far below a peak narrower than the
    // sample spacing; re-centre on the largest value the integrator sees.
    let mut m = m;
    let seen = Cell::new(m);
    for _ in 0..4 {
        let q = integrate(
            |r| {
                let e = g(r);
                if e.is_nan() {
                    return 0.0;
                }
                if e > seen.get() {
                    seen.set(e);
                }
                math::exp((e - m).min(700.0))
            },
            a,
            b,
            &cuts,
            // e^{2φ/h} carries rounding noise of relative size ~1e-8 far out.
            &QuadConfig {
                rel_tol: 1e-6,
                ..quad()
            },
        );
        if seen.get() > m + 1.0 {
            m = seen.get();
            continue;
        }
        let q = q?;
        if !(q.value > 0.0) {
            return Err(Error::Numeric("peaked integral evaluated to zero".into()));
        }
        return Ok(m + math::ln(q.value));
    }
    Err(Error::Numeric("could not locate the peak of a log-integrand".into()))
}

/// One evaluation of the Carleman ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarlemanSample {
    pub h: f64,
    /// `log ∫⟨r⟩^{−(1+η)} e^{2φ/h}|ũ|²`.
    pub log_lhs: f64,
    /// `log` of the right side with `C = 0`.
    pub log_rhs: f64,
    /// `h log(LHS/RHS₀)`.
    pub c_emp: f64,
}

/// `C_emp = h log(LHS/RHS₀)` for one test function.
///
/// All integrands are handled as logarithms, so `e^{2φ/h}` never has to be
/// formed.
pub fn carleman_numeric_check(
    wp: &WeightPhase,
    spec: &SectorSpec,
    v: &RadialPotential,
    f: &TestFunction,
) -> Result<CarlemanSample> {
    let (lo, hi) = f.check_support()?;
    let h = spec.h;
    if !(spec.epsilon > 0.0 && spec.epsilon <= h * (1.0 + 1e-12)) {
        return Err(Error::Config("Carleman check needs 0 < ε ≤ h".into()));
    }
    let eta = wp.scales.eta;
    let phase = |r: f64| 2.0 * wp.phi(r).unwrap_or(f64::NAN) / h;
    let ln_jb = |r: f64| 0.5 * math::ln(1.0 + r * r);
    let mut breaks = wp.kinks().to_vec();
    breaks.push(wp.params.chi.lo());
    breaks.push(wp.params.chi.hi());
    let log_lhs = log_integral(
        |r| {
            let (ln_a, _, _) = f.envelope.log_derivs(r);
            -(1.0 + eta) * ln_jb(r) + phase(r) + 2.0 * ln_a
        },
        lo,
        hi,
        &breaks,
    )?;
    let log_main = log_integral(
        |r| {
            let (ln_a, ratio) = residual_ratio(spec, v, f, r);
            (1.0 + eta) * ln_jb(r) + phase(r) + 2.0 * ln_a + math::ln(ratio.norm_sqr())
        },
        lo,
        hi,
        &breaks,
    )?;
    let log_mass = log_integral(
        |r| phase(r) + 2.0 * f.envelope.log_derivs(r).0,
        lo,
        hi,
        &breaks,
    )?;
    let ln_eps_mass = math::ln(spec.epsilon) + log_mass;
    let top = log_main.max(ln_eps_mass);
    let log_rhs = top + math::ln(math::exp(log_main - top) + math::exp(ln_eps_mass - top));
    if !(log_lhs.is_finite() && log_rhs.is_finite()) {
        return Err(Error::Numeric("Carleman ratio is not finite".into()));
    }
    Ok(CarlemanSample {
        h,
        log_lhs,
        log_rhs,
        c_emp: h * (log_lhs - log_rhs),
    })
}

/// Both sides of the near-origin estimate with `h⁻⁴` factored out.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NearOriginSample {
    pub h: f64,
    pub alpha: f64,
    pub lhs: f64,
    /// The four terms inside the bracket on the right.
    pub terms: [f64; 4],
    /// `h⁴ LHS / Σ terms`, zero when `LHS = 0`.
    pub constant: f64,
}

/// `α = α_β h^{2/(2−β)}`.
pub fn near_origin_alpha(alpha_beta: f64, h: f64, beta: f64) -> f64 {
    alpha_beta * math::powf(h, 2.0 / (2.0 - beta))
}

/// Empirical constant of the near-origin estimate for one test function.
pub fn near_origin_check(
    spec: &SectorSpec,
    v: &RadialPotential,
    f: &TestFunction,
    t0: f64,
    alpha: f64,
) -> Result<NearOriginSample> {
    if !(t0 > -0.5 && t0 < 0.0) {
        return Err(Error::Config(alloc::format!("t0 = {t0} must lie in (-1/2, 0)")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(alloc::format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let (lo, hi) = f.check_support()?;
    let h = spec.h;
    let cfg = quad();
    let clip = |a: f64, b: f64| (a.max(lo), b.min(hi));
    let run = |a: f64, b: f64, g: &dyn Fn(f64, &Jet) -> f64| -> Result<f64> {
        let (a, b) = clip(a, b);
        if b <= a {
            return Ok(0.0);
        }
        Ok(integrate(
            |r| if r <= 0.0 { 0.0 } else { g(r, &f.jet(r)) },
            a,
            b,
            &[],
            &cfg,
        )?
        .value)
    };
    let inner = |r: f64| math::powf(r, -1.0 - 2.0 * t0);
    let outer = |r: f64| math::powf(r, 3.0 - 2.0 * t0);
    let lhs = run(0.0, 0.5, &|r, j| inner(r) * j.u.norm_sqr())?;
    let t1 = run(0.0, 1.0, &|r, j| outer(r) * radial_residual(spec, v, r, j).norm_sqr())?;
    let t2 = run(alpha, 1.0, &|r, j| {
        let s = Complex64::new(v.value(r) - spec.energy, spec.sign.value() * spec.epsilon);
        outer(r) * (s * j.u).norm_sqr()
    })?;
    let t3 = h * h * run(0.5, 1.0, &|r, j| outer(r) * j.u.norm_sqr())?;
    let t4 = h * run(0.5, 1.0, &|r, j| outer(r) * h * h * j.du.norm_sqr())?;
    let sum = t1 + t2 + t3 + t4;
    let constant = if lhs == 0.0 {
        0.0
    } else if sum > 0.0 {
        math::powf(h, 4.0) * lhs / sum
    } else {
        f64::INFINITY
    };
    Ok(NearOriginSample {
        h,
        alpha,
        lhs,
        terms: [t1, t2, t3, t4],
        constant,
    })
}

/// `true` when no entry after the third exceeds its predecessor by more
/// than `rel · max(|previous|, floor)`; the first three are burn-in.
///
/// The sweeps pass the largest `|C|` seen as `floor`, so values creeping up
/// to zero from below are not read as growth.
pub fn growth_bounded(values: &[f64], rel: f64, floor: f64) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    values
        .iter()
        .skip(3)
        .zip(values.iter().skip(4))
        .all(|(&a, &b)| b <= a + rel * a.abs().max(floor))
}

/// `C_emp` over an `h` sweep (largest `h` first).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarlemanSweep {
    pub h: Vec<f64>,
    /// `c_emp[i][j]`: sweep point `i`, family member `j`.
    pub c_emp: Vec<Vec<f64>>,
    /// Largest `C_emp` over the family at each `h`.
    pub max_c: Vec<f64>,
    /// Index of the member attaining `max_c`.
    pub argmax: Vec<usize>,
    pub bounded: bool,
}

/// Runs [`carleman_numeric_check`] on the canonical family at each `h`, with
/// `ε = h` and the quasimode frequency `√E/h`.
pub fn carleman_sweep<E: Executor>(
    case: &Case,
    v: &RadialPotential,
    nu: f64,
    h_list: &[f64],
    exec: &E,
) -> Result<CarlemanSweep> {
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let b = case.params.resolve_b(case.construction.e_min)?;
    let rows: Vec<Result<Vec<f64>>> = exec.map(&hs, |&h| {
        let wp = case.weight_phase_with(h, true)?;
        let spec = SectorSpec {
            h,
            nu,
            energy: case.energy,
            epsilon: h,
            sign: super::Sign::Plus,
        };
        canonical_family(b, wp.a(), math::sqrt(case.energy) / h)
            .iter()
            .map(|f| carleman_numeric_check(&wp, &spec, v, f).map(|s| s.c_emp))
            .collect()
    });
    let c_emp: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let mut max_c = Vec::with_capacity(c_emp.len());
    let mut argmax = Vec::with_capacity(c_emp.len());
    for row in &c_emp {
        let (j, m) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &c)| if c > acc.1 { (j, c) } else { acc });
        max_c.push(m);
        argmax.push(j);
    }
    let floor = max_c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let bounded = growth_bounded(&max_c, 0.1, floor);
    Ok(CarlemanSweep {
        h: hs,
        c_emp,
        max_c,
        argmax,
        bounded,
    })
}

/// Test functions for the near-origin check: a bump at the `α` scale and
/// fixed functions inside the unit ball.
pub fn near_origin_family(h: f64, beta: f64) -> Vec<TestFunction> {
    let s = math::powf(h, 2.0 / (2.0 - beta));
    let k = 1.0 / h;
    let t = TestFunction::new;
    alloc::vec![
        t(Envelope::Bump { c: 2.0 * s, width: s }, 0.0),
        t(Envelope::Bump { c: 2.0 * s, width: s }, k),
        t(Envelope::Bump { c: 0.25, width: 0.2 }, 0.0),
        t(Envelope::Bump { c: 0.25, width: 0.2 }, k),
        t(Envelope::Bump { c: 0.5, width: 0.45 }, k),
        t(Envelope::PolyGauss { p: 2, s: 0.12 }, 0.0),
    ]
}

/// Near-origin constants over an `h` sweep for several `α_β`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NearOriginSweep {
    pub h: Vec<f64>,
    pub alpha_beta: Vec<f64>,
    /// `max_c[k][i]`: `α_β` index `k`, sweep point `i`.
    pub max_c: Vec<Vec<f64>>,
    pub bounded: Vec<bool>,
}

pub fn near_origin_sweep<E: Executor>(
    v: &RadialPotential,
    beta: f64,
    nu: f64,
    energy: f64,
    t0: f64,
    alpha_beta: &[f64],
    h_list: &[f64],
    exec: &E,
) -> Result<NearOriginSweep> {
    let mut hs = h_list.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut max_c = Vec::with_capacity(alpha_beta.len());
    let mut bounded = Vec::with_capacity(alpha_beta.len());
    for &ab in alpha_beta {
        let row: Vec<Result<f64>> = exec.map(&hs, |&h| {
            let spec = SectorSpec {
                h,
                nu,
                energy,
                epsilon: h,
                sign: super::Sign::Plus,
            };
            let alpha = near_origin_alpha(ab, h, beta);
            let mut m: f64 = 0.0;
            for f in near_origin_family(h, beta) {
                m = m.max(near_origin_check(&spec, v, &f, t0, alpha)?.constant);
            }
            Ok(m)
        });
        let row: Vec<f64> = row.into_iter().collect::<Result<_>>()?;
        let floor = row.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        bounded.push(growth_bounded(&row, 0.1, floor));
        max_c.push(row);
    }
    Ok(NearOriginSweep {
        h: hs,
        alpha_beta: alpha_beta.to_vec(),
        max_c,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialParams;
    use crate::resolvent::Sign;
    use crate::scales::default_construction;

    fn case0() -> Case {
        let p = PotentialParams::with_defaults(3, 1.0, 1.0, 0.0, 1.0, 2.0, 1.0);
        let cp = default_construction(0.0, 1.0, 2.0, 0.1).unwrap();
        Case::new(p, cp)
    }

    #[test]
    fn growth_rule() {
        assert!(growth_bounded(&[5.0, 9.0, 1.0, 1.05, 1.1, 1.2], 0.1, 0.0));
        assert!(growth_bounded(&[5.0, 9.0, 1.0, 9.0, 9.5], 0.1, 0.0));
        assert!(!growth_bounded(&[5.0, 9.0, 1.0, 1.05, 1.2], 0.1, 0.0));
        assert!(!growth_bounded(&[1.0, f64::NAN], 0.1, 0.0));
    }

    #[test]
    fn zero_function_near_origin_is_zero() {
        let spec = SectorSpec {
            h: 0.01,
            nu: 0.0,
            energy: 1.0,
            epsilon: 0.01,
            sign: Sign::Plus,
        };
        let f = TestFunction::new(Envelope::Bump { c: 0.75, width: 0.2 }, 0.0);
        let s = near_origin_check(&spec, &RadialPotential::zero(), &f, -0.25, 1e-4).unwrap();
        assert_eq!(s.lhs, 0.0);
        assert_eq!(s.constant, 0.0);
        assert!(s.terms.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn carleman_ratio_is_finite_for_the_family() {
        let case = case0();
        let h = 0.05;
        let wp = case.weight_phase_with(h, true).unwrap();
        let v = crate::potential::benchmark_potential(&case.params);
        let b = case.params.resolve_b(1.0).unwrap();
        let spec = SectorSpec {
            h,
            nu: 0.0,
            energy: 1.0,
            epsilon: h,
            sign: Sign::Plus,
        };
        for f in canonical_family(b, wp.a(), 1.0 / h) {
            let s = carleman_numeric_check(&wp, &spec, &v, &f).unwrap();
            assert!(s.c_emp.is_finite(), "{f:?}");
        }
    }

    #[test]
    fn constant_phase_cancels() {
        // On r < 1 with β = 0 the phase is nearly linear; shrinking the
        // support makes e^{2φ/h} nearly constant and C_emp/h the plain ratio.
        let case = case0();
        let h = 0.2;
        let wp = case.weight_phase_with(h, true).unwrap();
        let f = TestFunction::new(Envelope::Bump { c: 0.5, width: 1e-3 }, 0.0);
        let spec = SectorSpec {
            h,
            nu: 0.0,
            energy: 1.0,
            epsilon: h,
            sign: Sign::Plus,
        };
        let v = RadialPotential::zero();
        let s = carleman_numeric_check(&wp, &spec, &v, &f).unwrap();
        let eta = wp.scales.eta;
        let cfg = quad();
        let jet = |r: f64| f.jet(r);
        let lhs = integrate(
            |r| (1.0 + r * r).powf(-0.5 * (1.0 + eta)) * jet(r).u.norm_sqr(),
            0.499,
            0.501,
            &[],
            &cfg,
        )
        .unwrap()
        .value;
        let rhs = integrate(
            |r| {
                (1.0 + r * r).powf(0.5 * (1.0 + eta)) * radial_residual(&spec, &v, r, &jet(r)).norm_sqr()
                    + h * jet(r).u.norm_sqr()
            },
            0.499,
            0.501,
            &[],
            &cfg,
        )
        .unwrap()
        .value;
        let plain = (lhs / rhs).ln();
        let phase_width = 2.0 * 2e-3 * wp.phi_prime(0.5) / h;
        assert!((s.c_emp / h - plain).abs() <= phase_width, "{} vs {plain}", s.c_emp / h);
    }
}
