//! Campaign orchestration: validate → calibrate → verify → sweep.

use std::time::{SystemTime, UNIX_EPOCH};

use carleman_core::potential::{benchmark_potential, validate, RadialPotential};
use carleman_core::resolvent::carleman::{carleman_sweep, growth_bounded, near_origin_sweep};
use carleman_core::resolvent::{sweep_and_fit, theorem_rate};
use carleman_core::scales::{derive_scales, DeltaCase};
use carleman_core::verifier::{
    calibrate, empirical_h_threshold, phase_scaling_fit, verify_w_lemma, CalibrationSearch, Case,
    InequalityReport, Mode, Region,
};
use carleman_core::{Error, Executor, WeightPhase};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Campaign, HGrid, RunConfig};
use crate::error::{exit, ForgeError};
use crate::output::Sink;

#[derive(Debug, Clone, Serialize)]
pub struct CampaignOutcome {
    pub campaign: Campaign,
    pub passed: bool,
    pub failures: Vec<String>,
    /// Error that stopped the campaign, if any.
    pub error: Option<String>,
    #[serde(skip)]
    pub error_code: Option<i32>,
    pub files: Vec<String>,
    pub summary: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationSummary {
    pub tau: f64,
    pub t: f64,
    /// `false` when `tau` was fixed in the config.
    pub calibrated: bool,
    pub h_grid: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    /// The only field that differs between identical runs.
    pub generated_unix: u64,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub provenance: Provenance,
    pub calibration: Option<CalibrationSummary>,
    pub campaigns: Vec<CampaignOutcome>,
    pub passed: bool,
    pub exit_code: i32,
}

impl CampaignReport {
    fn finish(&mut self) {
        self.passed = self.campaigns.iter().all(|c| c.passed);
        let codes: Vec<i32> = self.campaigns.iter().filter_map(|c| c.error_code).collect();
        self.exit_code = if codes.contains(&exit::CONFIG) {
            exit::CONFIG
        } else if codes.contains(&exit::NUMERIC) {
            exit::NUMERIC
        } else if self.passed {
            exit::PASS
        } else {
            exit::VERIFICATION_FAILED
        };
    }
}

struct Runner<'a, E: Executor> {
    cfg: &'a RunConfig,
    exec: &'a E,
    sink: Sink,
    case: Option<Case>,
    threshold: Option<f64>,
}

/// Runs the configured campaigns and writes `report.json` plus the
/// per-campaign files into `cfg.output.directory`.
///
/// Errors before any campaign starts (bad config, inadmissible potential,
/// unwritable directory) are returned; errors inside a campaign are recorded
/// in its outcome and decide the exit code.
pub fn run<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<CampaignReport, ForgeError> {
    cfg.check()?;
    let campaigns = cfg.campaign.expand();
    let params = cfg.potential.params();
    let violations = validate(&params);
    if !violations.is_empty() && !campaigns.contains(&Campaign::Validate) {
        return Err(ForgeError::Config(format!(
            "potential parameters are not admissible: {}",
            violations.join("; ")
        )));
    }
    let sink = Sink::new(&cfg.output.directory, cfg.output.csv(), cfg.output.json())?;
    let mut runner = Runner {
        cfg,
        exec,
        sink,
        case: None,
        threshold: None,
    };
    let mut report = CampaignReport {
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            generated_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config: cfg.clone(),
        },
        calibration: None,
        campaigns: Vec::new(),
        passed: false,
        exit_code: exit::PASS,
    };

    let mut blocked: Option<String> = None;
    for c in campaigns {
        if let Some(why) = &blocked {
            report.campaigns.push(skipped(c, why));
            continue;
        }
        if c == Campaign::Validate {
            let outcome = runner.validate(&violations)?;
            if !outcome.passed {
                blocked = Some("potential parameters are not admissible".into());
            }
            report.campaigns.push(outcome);
            continue;
        }
        if c.needs_case() && runner.case.is_none() {
            match runner.prepare_case() {
                Ok(summary) => {
                    let failed = summary.failure.clone();
                    report.calibration = Some(summary);
                    if let Some(f) = failed {
                        blocked = Some(format!("calibration failed: {f}"));
                        report.campaigns.push(skipped(c, blocked.as_deref().unwrap_or_default()));
                        continue;
                    }
                }
                Err(e) => {
                    let msg = e.to_string();
                    report.campaigns.push(errored(c, &e, runner.sink.take_written()));
                    blocked = Some(msg);
                    continue;
                }
            }
        }
        let result = match c {
            Campaign::VerifyInequality => runner.verify_inequality(),
            Campaign::VerifyLemmas => runner.verify_lemmas(),
            Campaign::PhaseScaling => runner.phase_scaling(),
            Campaign::ResolventSweep => runner.resolvent_sweep(),
            Campaign::CarlemanCheck => runner.carleman_check(),
            Campaign::Validate | Campaign::All => unreachable!(),
        };
        let files = runner.sink.take_written();
        report.campaigns.push(match result {
            Ok(mut o) => {
                o.files = files;
                o
            }
            Err(e) => errored(c, &e, files),
        });
    }
    report.finish();
    runner.sink.write_json("report.json", &report)?;
    Ok(report)
}

fn outcome(campaign: Campaign, failures: Vec<String>, summary: Value) -> CampaignOutcome {
    CampaignOutcome {
        campaign,
        passed: failures.is_empty(),
        failures,
        error: None,
        error_code: None,
        files: Vec::new(),
        summary,
    }
}

fn skipped(campaign: Campaign, why: &str) -> CampaignOutcome {
    outcome(campaign, vec![format!("skipped: {why}")], Value::Null)
}

fn errored(campaign: Campaign, e: &ForgeError, files: Vec<String>) -> CampaignOutcome {
    // Failing to find any passing τ or h is a verification verdict, not a crash.
    let code = match e {
        ForgeError::Core(Error::CalibrationFailed(_) | Error::ThresholdNotFound { .. }) => None,
        _ => Some(e.exit_code()),
    };
    CampaignOutcome {
        campaign,
        passed: false,
        failures: vec![e.to_string()],
        error: Some(e.to_string()),
        error_code: code,
        files,
        summary: Value::Null,
    }
}

#[derive(Serialize)]
struct InequalityRow {
    h: f64,
    tau: f64,
    t: f64,
    passed: bool,
    failures: usize,
    min_margin: f64,
    min_margin_inner: f64,
    min_margin_middle: f64,
    min_margin_outer: f64,
    min_combined_margin: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct MarginRow {
    h: f64,
    r: f64,
    region: &'static str,
    margin: f64,
}

#[derive(Serialize)]
struct WeightRow {
    h: f64,
    r: f64,
    region: &'static str,
    ln_w: f64,
    ln_w_prime: f64,
    phi0_prime: f64,
    big_w: f64,
    big_phi: f64,
    q: f64,
}

#[derive(Serialize)]
struct LemmaRow {
    h: f64,
    sandwich_failures: usize,
    sandwich_worst: f64,
    w_jump: f64,
    phi0_jump: f64,
    fd_points: usize,
    fd_w: f64,
    fd_phi0: f64,
    fd_log_w: f64,
    fd_log_phi0_prime: f64,
    ln_c_w: f64,
    c_wprime: f64,
    c_ratio: f64,
    q_min: f64,
}

impl<E: Executor> Runner<'_, E> {
    fn validate(&mut self, violations: &[String]) -> Result<CampaignOutcome, ForgeError> {
        let mut failures: Vec<String> = violations.to_vec();
        let params = self.cfg.potential.params();
        if let Some(comps) = &self.cfg.potential.concrete {
            if let Err(e) = RadialPotential::new(comps.clone(), &params) {
                failures.push(e.to_string());
            }
        }
        let summary = json!({ "violations": failures });
        self.sink.json("validate.json", &summary)?;
        let mut o = outcome(Campaign::Validate, failures, summary);
        o.files = self.sink.take_written();
        Ok(o)
    }

    fn mode(&self) -> Result<Mode, ForgeError> {
        Ok(match &self.cfg.potential.concrete {
            Some(c) => Mode::Concrete {
                potential: RadialPotential::new(c.clone(), &self.cfg.potential.params())?,
            },
            None => Mode::Envelope,
        })
    }

    fn potential(&self) -> Result<RadialPotential, ForgeError> {
        let params = self.cfg.potential.params();
        Ok(match &self.cfg.potential.concrete {
            Some(c) => RadialPotential::new(c.clone(), &params)?,
            None => benchmark_potential(&params),
        })
    }

    fn prepare_case(&mut self) -> Result<CalibrationSummary, ForgeError> {
        let cp = self.cfg.construction.build(&self.cfg.potential)?;
        let mut case = Case::new(self.cfg.potential.params(), cp);
        case.grid = self.cfg.grid;
        case.mode = self.mode()?;
        let hs = self.cfg.calibration.h_grid.values();
        let summary = if self.cfg.construction.tau.is_some() {
            CalibrationSummary {
                tau: cp.tau,
                t: cp.t,
                calibrated: false,
                h_grid: hs,
                failure: None,
            }
        } else {
            let search = CalibrationSearch {
                max_tau_exponent: self.cfg.calibration.max_tau_exponent,
                max_t: self.cfg.calibration.max_t,
            };
            match calibrate(&case, &hs, &search, self.exec) {
                Ok(cal) => {
                    case = case.with_tau_t(cal.tau, cal.t);
                    CalibrationSummary {
                        tau: cal.tau,
                        t: cal.t,
                        calibrated: true,
                        h_grid: hs,
                        failure: None,
                    }
                }
                Err(Error::CalibrationFailed(f)) => CalibrationSummary {
                    tau: f64::NAN,
                    t: f64::NAN,
                    calibrated: true,
                    h_grid: hs,
                    failure: Some(f),
                },
                Err(e) => return Err(e.into()),
            }
        };
        self.case = Some(case);
        Ok(summary)
    }

    fn case(&self) -> &Case {
        self.case.as_ref().expect("case prepared before case campaigns")
    }

    fn threshold(&mut self) -> Result<f64, ForgeError> {
        if let Some(t) = self.threshold {
            return Ok(t);
        }
        let th = empirical_h_threshold(self.case(), &self.cfg.inequality.threshold, self.exec)?;
        self.sink.json(
            "threshold.json",
            &json!({ "h": th.h, "at_top": th.at_top, "tested": th.tested }),
        )?;
        self.threshold = Some(th.h);
        Ok(th.h)
    }

    /// The explicit grid, or the sub-threshold grid.
    fn verification_hs(&mut self, explicit: Option<HGrid>) -> Result<Vec<f64>, ForgeError> {
        if let Some(g) = explicit {
            return Ok(g.values());
        }
        let th = self.threshold()?;
        let ic = &self.cfg.inequality;
        let lo = th * 10f64.powf(-ic.below_threshold_decades);
        Ok(HGrid::log(lo, th, ic.below_threshold_points).values())
    }

    fn verify_inequality(&mut self) -> Result<CampaignOutcome, ForgeError> {
        let threshold = self.threshold()?;
        let hs = self.verification_hs(self.cfg.inequality.h_grid)?;
        let case = self.case().clone();
        let reports: Vec<InequalityReport> = self
            .exec
            .map(&hs, |&h| case.verify(h))
            .into_iter()
            .collect::<Result<_, _>>()?;
        let region_min = |r: &InequalityReport, g: Region| {
            r.regions
                .iter()
                .find(|x| x.region == g)
                .map(|x| x.min_margin)
                .unwrap_or(f64::NAN)
        };
        let rows: Vec<InequalityRow> = reports
            .iter()
            .map(|r| InequalityRow {
                h: r.h,
                tau: r.tau,
                t: r.t,
                passed: r.passed(),
                failures: r.failures.len(),
                min_margin: r.min_margin,
                min_margin_inner: region_min(r, Region::Inner),
                min_margin_middle: region_min(r, Region::Middle),
                min_margin_outer: region_min(r, Region::Outer),
                min_combined_margin: r.min_combined_margin,
                tolerance: r.tolerance,
            })
            .collect();
        self.sink.csv("inequality.csv", &rows)?;
        if self.cfg.output.dump_margins {
            let mut rows = Vec::new();
            for rep in &reports {
                let log_a = derive_scales(rep.h, case.params.delta, &case.construction)?.log_a();
                rows.extend(rep.grid.iter().zip(&rep.margins).map(|(&r, &m)| MarginRow {
                    h: rep.h,
                    r,
                    region: region_label(r, log_a),
                    margin: m,
                }));
            }
            self.sink.csv("margins.csv", rows)?;
        }
        if self.cfg.output.dump_weights {
            self.dump_weights(&hs)?;
        }
        let mut failures = Vec::new();
        if !(threshold > 0.0) {
            failures.push(format!("empirical threshold {threshold} is not positive"));
        }
        for r in reports.iter().filter(|r| !r.passed()) {
            let regions: Vec<&str> = r.failed_regions().iter().map(|g| g.label()).collect();
            let (x, m) = r.failures[0];
            failures.push(format!(
                "h = {:e}: {} failing points in {}, first at r = {x:e} (margin {m:e})",
                r.h,
                r.failures.len(),
                regions.join(", ")
            ));
        }
        let summary = json!({
            "threshold": threshold,
            "h": hs,
            "min_margin": rows.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min),
            "tau": case.construction.tau,
            "t": case.construction.t,
        });
        self.sink.json("inequality.json", &summary)?;
        Ok(outcome(Campaign::VerifyInequality, failures, summary))
    }

    fn dump_weights(&mut self, hs: &[f64]) -> Result<(), ForgeError> {
        let case = self.case().clone();
        let n = self.cfg.output.weight_points.max(2);
        let grid = self.cfg.grid;
        let rows: Vec<Vec<WeightRow>> = self
            .exec
            .map(hs, |&h| -> Result<Vec<WeightRow>, Error> {
                let wp = case.weight_phase(h)?;
                let l0 = grid.r_min.ln();
                let l1 = wp.log_a() + grid.r_max_factor.ln();
                let kinks = [0.0, wp.b.ln(), wp.log_a()];
                Ok((0..n)
                    .map(|i| l0 + (l1 - l0) * i as f64 / (n - 1) as f64)
                    .filter(|u| kinks.iter().all(|k| (u - k).abs() > grid.exclusion))
                    .map(|u| {
                        let r = u.exp();
                        WeightRow {
                            h,
                            r,
                            region: Region::of(&wp, r).label(),
                            ln_w: wp.ln_w(r),
                            ln_w_prime: wp.ln_w_prime(r),
                            phi0_prime: wp.phi0_prime(r),
                            big_w: wp.big_w(r),
                            big_phi: wp.big_phi(r),
                            q: wp.q(r),
                        }
                    })
                    .collect())
            })
            .into_iter()
            .collect::<Result<_, _>>()?;
        self.sink.csv("weights.csv", rows.into_iter().flatten())
    }

    fn verify_lemmas(&mut self) -> Result<CampaignOutcome, ForgeError> {
        let explicit = self.cfg.lemmas.h_grid.or(self.cfg.inequality.h_grid);
        let hs = self.verification_hs(explicit)?;
        let case = self.case().clone();
        let lc = self.cfg.lemmas;
        let checks: Vec<PointChecks> = self
            .exec
            .map(&hs, |&h| {
                let wp = case.weight_phase_with(h, true)?;
                point_checks(&wp, &lc)
            })
            .into_iter()
            .collect::<Result<_, Error>>()?;
        let wl = verify_w_lemma(&case, &hs, self.exec)?;
        let rows: Vec<LemmaRow> = checks
            .iter()
            .zip(&wl.rows)
            .map(|(c, w)| LemmaRow {
                h: w.h,
                sandwich_failures: c.sandwich_failures,
                sandwich_worst: c.sandwich_worst,
                w_jump: c.w_jump,
                phi0_jump: c.phi0_jump,
                fd_points: c.fd_points,
                fd_w: c.fd[0],
                fd_phi0: c.fd[1],
                fd_log_w: c.fd[2],
                fd_log_phi0_prime: c.fd[3],
                ln_c_w: w.ln_c_w,
                c_wprime: w.c_wprime,
                c_ratio: w.c_ratio,
                q_min: w.q_min,
            })
            .collect();
        self.sink.csv("lemmas.csv", &rows)?;
        let mut failures = Vec::new();
        for r in &rows {
            if r.sandwich_failures > 0 {
                failures.push(format!("h = {:e}: sandwich fails at {} points", r.h, r.sandwich_failures));
            }
            if !(r.w_jump <= lc.continuity_tol && r.phi0_jump <= lc.continuity_tol) {
                failures.push(format!(
                    "h = {:e}: kink jumps w {:e}, phi0 {:e} exceed {:e}",
                    r.h, r.w_jump, r.phi0_jump, lc.continuity_tol
                ));
            }
            let fd = [r.fd_w, r.fd_phi0, r.fd_log_w, r.fd_log_phi0_prime];
            if !fd.iter().all(|&e| e < lc.fd_tol) {
                failures.push(format!("h = {:e}: finite-difference errors {fd:?} exceed {:e}", r.h, lc.fd_tol));
            }
            if !(r.q_min >= -lc.q_tol) {
                failures.push(format!("h = {:e}: q reaches {:e} beyond a", r.h, r.q_min));
            }
        }
        for (ok, what) in [
            (wl.c_w_bounded, "sup w constant"),
            (wl.c_wprime_bounded, "w' lower-bound exponent"),
            (wl.c_ratio_bounded, "w^2/w' exponent"),
        ] {
            if !ok {
                failures.push(format!("{what} grows over the h sweep"));
            }
        }
        let summary = json!({
            "h": hs,
            "c_w_bounded": wl.c_w_bounded,
            "c_wprime_bounded": wl.c_wprime_bounded,
            "c_ratio_bounded": wl.c_ratio_bounded,
            "q_nonnegative": rows.iter().all(|r| r.q_min >= -lc.q_tol),
            "max_fd_error": rows.iter().flat_map(|r| [r.fd_w, r.fd_phi0, r.fd_log_w, r.fd_log_phi0_prime]).fold(0.0, f64::max),
            "max_kink_jump": rows.iter().flat_map(|r| [r.w_jump, r.phi0_jump]).fold(0.0, f64::max),
        });
        self.sink.json("lemmas.json", &summary)?;
        Ok(outcome(Campaign::VerifyLemmas, failures, summary))
    }

    fn phase_scaling(&mut self) -> Result<CampaignOutcome, ForgeError> {
        let pc = self.cfg.phase_scaling;
        let case = self.case().clone();
        let ps = phase_scaling_fit(&case, &pc.h_grid.values(), self.exec)?;
        let delta = case.params.delta;
        let expected = pc.expected_p.unwrap_or_else(|| expected_phase_p(delta));
        let tol = pc.tolerance.unwrap_or(match DeltaCase::of(delta) {
            DeltaCase::Between => 0.1,
            _ => 0.05,
        });
        #[derive(Serialize)]
        struct Row {
            h: f64,
            sup_phi0: f64,
        }
        self.sink.csv(
            "phase_scaling.csv",
            ps.series.iter().map(|&(h, v)| Row { h, sup_phi0: v }),
        )?;
        let mut failures = Vec::new();
        if !((ps.fit.p - expected).abs() <= tol) {
            failures.push(format!("fitted p = {:.4} not within {tol} of {expected:.4}", ps.fit.p));
        }
        let summary = json!({
            "fit": ps.fit,
            "q_model": ps.q_model,
            "expected_p": expected,
            "tolerance": tol,
        });
        self.sink.json("phase_scaling.json", &summary)?;
        Ok(outcome(Campaign::PhaseScaling, failures, summary))
    }

    fn resolvent_sweep(&mut self) -> Result<CampaignOutcome, ForgeError> {
        let rc = &self.cfg.resolvent;
        let v = self.potential()?;
        let cp = self.cfg.construction.build(&self.cfg.potential)?;
        let rate = theorem_rate(self.cfg.potential.delta, cp.eps_exponent, cp.rho_tilde);
        let sw = sweep_and_fit(&rc.solver, &v, rate, &rc.h_grid.values(), self.exec)?;
        #[derive(Serialize)]
        struct Row {
            h: f64,
            epsilon: f64,
            g: f64,
            log_g: f64,
            bound_rate: f64,
            c_fit_running: f64,
            ell_star: usize,
            ell_max: usize,
            r_max: f64,
            grid: usize,
            grid_change: f64,
            radius_change: Option<f64>,
        }
        let rows: Vec<Row> = sw
            .points
            .iter()
            .zip(&sw.estimates)
            .map(|(p, e)| Row {
                h: p.h,
                epsilon: p.epsilon,
                g: p.g,
                log_g: p.log_g,
                bound_rate: p.bound_rate,
                c_fit_running: p.c_fit_running,
                ell_star: p.ell_star,
                ell_max: e.ell_max,
                r_max: e.r_max,
                grid: e.grid,
                grid_change: e.grid_change,
                radius_change: e.radius_change,
            })
            .collect();
        self.sink.csv("resolvent.csv", &rows)?;
        if self.cfg.output.dump_modes {
            #[derive(Serialize)]
            struct ModeRow {
                h: f64,
                ell: usize,
                nu: f64,
                norm: f64,
                converged: bool,
            }
            let rows = sw.estimates.iter().flat_map(|e| {
                e.modes.iter().map(move |m| ModeRow {
                    h: e.h,
                    ell: m.ell,
                    nu: m.nu,
                    norm: m.norm,
                    converged: m.converged,
                })
            });
            self.sink.csv("modes.csv", rows)?;
        }
        let mut failures = Vec::new();
        if let Some(a) = &sw.aborted {
            failures.push(format!("sweep aborted: {a}"));
        }
        if !sw.cap_ok {
            failures.push("g exceeds (1 + 1e-6)/epsilon".into());
        }
        if !sw.consistent && sw.aborted.is_none() {
            failures.push(format!("log g / rate not bounded (C_fit = {})", sw.c_fit));
        }
        let summary = json!({
            "rate": { "p": rate.0, "q": rate.1 },
            "c_fit": sw.c_fit,
            "fit": sw.fit,
            "cap_ok": sw.cap_ok,
            "consistent": sw.consistent,
            "aborted": sw.aborted,
        });
        self.sink.json("resolvent.json", &summary)?;
        let mut o = outcome(Campaign::ResolventSweep, failures, summary);
        if sw.aborted.is_some() {
            o.error = sw.aborted.clone();
            o.error_code = Some(exit::NUMERIC);
        }
        Ok(o)
    }

    fn carleman_check(&mut self) -> Result<CampaignOutcome, ForgeError> {
        let cc = self.cfg.carleman.clone();
        let case = self.case().clone();
        let v = self.potential()?;
        let hs = cc.grid(case.params.delta).values();
        let cs = carleman_sweep(&case, &v, cc.nu, &hs, self.exec)?;
        let no = near_origin_sweep(
            &v,
            case.params.beta,
            cc.nu,
            case.energy,
            cc.t0,
            &cc.alpha_beta,
            &hs,
            self.exec,
        )?;
        let bounded = |xs: &[f64]| {
            let floor = xs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            growth_bounded(xs, cc.growth_rel, floor)
        };
        #[derive(Serialize)]
        struct Row {
            h: f64,
            member: usize,
            c_emp: f64,
        }
        self.sink.csv(
            "carleman.csv",
            cs.h.iter().zip(&cs.c_emp).flat_map(|(&h, row)| {
                row.iter().enumerate().map(move |(member, &c_emp)| Row { h, member, c_emp })
            }),
        )?;
        #[derive(Serialize)]
        struct NearRow {
            alpha_beta: f64,
            h: f64,
            max_c: f64,
        }
        self.sink.csv(
            "near_origin.csv",
            no.alpha_beta.iter().zip(&no.max_c).flat_map(|(&ab, row)| {
                no.h.iter().zip(row).map(move |(&h, &c)| NearRow { alpha_beta: ab, h, max_c: c })
            }),
        )?;
        let mut failures = Vec::new();
        let carleman_ok = bounded(&cs.max_c);
        if !carleman_ok {
            failures.push(format!("Carleman constant grows over the sweep: {:?}", cs.max_c));
        }
        let near_ok: Vec<bool> = no.max_c.iter().map(|row| bounded(row)).collect();
        for (ab, ok) in no.alpha_beta.iter().zip(&near_ok) {
            if !ok {
                failures.push(format!("near-origin constant grows over the sweep for alpha_beta = {ab}"));
            }
        }
        let summary = json!({
            "h": cs.h,
            "max_c": cs.max_c,
            "argmax": cs.argmax,
            "bounded": carleman_ok,
            "near_origin": { "alpha_beta": no.alpha_beta, "max_c": no.max_c, "bounded": near_ok },
        });
        self.sink.json("carleman.json", &summary)?;
        Ok(outcome(Campaign::CarlemanCheck, failures, summary))
    }
}

fn region_label(r: f64, log_a: f64) -> &'static str {
    if r < 1.0 {
        Region::Inner.label()
    } else if r.ln() < log_a {
        Region::Middle.label()
    } else {
        Region::Outer.label()
    }
}

/// Regime value of the `h^{-p}` exponent of `sup φ₀`.
pub fn expected_phase_p(delta: f64) -> f64 {
    match DeltaCase::of(delta) {
        DeltaCase::One => 0.0,
        DeltaCase::Zero => 2.0 / 3.0,
        DeltaCase::Between => 2.0 * (1.0 - delta) / (3.0 * (1.0 + 2.0 * delta)),
    }
}

struct PointChecks {
    sandwich_failures: usize,
    sandwich_worst: f64,
    w_jump: f64,
    phi0_jump: f64,
    fd_points: usize,
    /// Worst relative errors: w′, φ₀′, (log w)′ = 1/𝒲, (log φ₀′)′ = Φ.
    fd: [f64; 4],
}

fn point_checks(wp: &WeightPhase, lc: &crate::config::LemmaSection) -> Result<PointChecks, Error> {
    let n = lc.sandwich_points.max(2);
    let mut sandwich_failures = 0;
    let mut sandwich_worst: f64 = 0.0;
    let lmax = lc.sandwich_r_max.ln();
    for i in 0..n {
        let r = (lmax * i as f64 / (n - 1) as f64).exp();
        let s = wp.sandwich_check(r)?;
        if !s.ok {
            sandwich_failures += 1;
        }
        sandwich_worst = sandwich_worst.max(s.lhs - s.mid).max(s.mid - s.rhs);
    }

    let o = lc.continuity_offset;
    let mut w_jump: f64 = 0.0;
    let mut phi0_jump: f64 = 0.0;
    for lk in [0.0, wp.b.ln(), wp.log_a()] {
        let (lo, hi) = ((lk - o).exp(), (lk + o).exp());
        w_jump = w_jump.max((wp.ln_w(hi) - wp.ln_w(lo)).exp_m1().abs());
        let (p0, p1) = (wp.phi0(lo)?, wp.phi0(hi)?);
        phi0_jump = phi0_jump.max((p1 - p0).abs() / p0.abs().max(p1.abs()).max(f64::MIN_POSITIVE));
    }

    let kinks = [0.0, wp.b.ln(), wp.log_a()];
    let l0 = (1e-2f64).ln();
    let l1 = wp.log_a() + 100f64.ln();
    let m = lc.fd_points.max(2);
    let mut fd = [0.0f64; 4];
    let mut fd_points = 0;
    for i in 0..m {
        let u = l0 + (l1 - l0) * i as f64 / (m - 1) as f64;
        if kinks.iter().any(|k| (u - k).abs() < lc.fd_kink_exclusion) {
            continue;
        }
        fd_points += 1;
        let r = u.exp();
        let d = lc.fd_step * r;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        // (log w)′ by differences against w′/w; identical to the relative error of w′.
        let dlw = (wp.ln_w(r + d) - wp.ln_w(r - d)) / (2.0 * d);
        fd[0] = fd[0].max(rel(dlw, (wp.ln_w_prime(r) - wp.ln_w(r)).exp()));
        let dp = (wp.phi0(r + d)? - wp.phi0(r - d)?) / (2.0 * d);
        fd[1] = fd[1].max(rel(dp, wp.phi0_prime(r)));
        fd[2] = fd[2].max(rel(dlw, 1.0 / wp.big_w(r)));
        let dlp = (wp.ln_phi0_prime(r + d) - wp.ln_phi0_prime(r - d)) / (2.0 * d);
        fd[3] = fd[3].max(rel(dlp, wp.big_phi(r)));
    }
    Ok(PointChecks {
        sandwich_failures,
        sandwich_worst,
        w_jump,
        phi0_jump,
        fd_points,
        fd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_exponents() {
        assert_eq!(expected_phase_p(1.0), 0.0);
        assert!((expected_phase_p(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((expected_phase_p(0.5) - 1.0 / 6.0).abs() < 1e-15);
    }
}
