use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn forge(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_carleman-forge"));
    c.args(args).env_remove("CARLEMAN_FORGE_JOBS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn run_fixture(name: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = fixture(name);
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    forge(&args, &[])
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// File contents with the report timestamp blanked.
fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let mut text = std::fs::read_to_string(&p).unwrap();
        if p.file_name().unwrap() == "report.json" {
            let mut v: Value = serde_json::from_str(&text).unwrap();
            v["provenance"]["generated_unix"] = Value::Null;
            text = v.to_string();
        }
        m.insert(p.file_name().unwrap().to_string_lossy().into_owned(), text);
    }
    m
}

#[test]
fn exit_0_free_potential_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_fixture("free_inequality.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["exit_code"], 0);
    assert_eq!(r["campaigns"][0]["campaign"], "verify-inequality");
    assert!(dir.path().join("inequality.csv").exists());
}

#[test]
fn exit_2_validate_lists_beta_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_fixture("beta_too_large.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = report(dir.path());
    let failures = r["campaigns"][0]["failures"].as_array().unwrap();
    assert!(failures
        .iter()
        .any(|f| f.as_str().unwrap().contains("beta exceeds 2(√3−1)≈1.4641")));
}

#[test]
fn exit_2_when_later_campaigns_are_blocked_by_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_fixture("beta_too_large.json", dir.path(), &["--campaign", "all"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = report(dir.path());
    let cs = r["campaigns"].as_array().unwrap();
    assert_eq!(cs.len(), 6);
    assert!(cs[1]["failures"][0].as_str().unwrap().starts_with("skipped"));
}

#[test]
fn exit_3_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_fixture("bad_weight_exponent.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("s = 0.4 must exceed 1/2"), "{}", stderr(&o));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"potential": {"betta": 1.0}}"#).unwrap();
    let o = forge(&["run", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("unknown field"));

    let o = forge(&["run", "--config", "/nonexistent/config.json"], &[]);
    assert_eq!(o.status.code(), Some(3));

    // Inadmissible potential without a validate campaign.
    let o = run_fixture("beta_too_large.json", dir.path(), &["--campaign", "phase-scaling"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run_fixture("free_inequality.json", dir.path(), &["--jobs", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn exit_3_for_inadmissible_h_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"campaign": "phase-scaling", "phase_scaling": {"h_grid": {"min": 1e-4, "max": 0.2, "points": 8}}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = forge(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert!(r["campaigns"][0]["error"].as_str().unwrap().contains("inadmissible h"));
}

#[test]
fn exit_4_unresolved_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_fixture("unresolvable_grid.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let r = report(dir.path());
    assert!(r["campaigns"][0]["error"].as_str().unwrap().contains("under-resolved"));
}

#[test]
fn outputs_are_reproducible_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = fixture("quick.json");
    let args = |out: &Path, jobs: &str| {
        vec![
            "run".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            out.to_str().unwrap().into(),
            "--dump-margins".into(),
            "--dump-modes".into(),
            "--dump-weights".into(),
            "--jobs".into(),
            jobs.into(),
        ]
    };
    let run = |out: &Path, jobs: &str| {
        let a = args(out, jobs);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        forge(&refs, &[])
    };
    // The short resolvent window may or may not pass; only sameness matters here.
    let oa = run(a.path(), "1");
    assert!(matches!(oa.status.code(), Some(0 | 2)), "{}", stderr(&oa));
    let ob = run(b.path(), "3");
    assert_eq!(oa.status.code(), ob.status.code(), "{}", stderr(&ob));
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        let mut va = v.clone();
        let mut vb = sb[k].clone();
        if k == "report.json" {
            // The config echo differs only in the output directory.
            for (s, d) in [(&mut va, a.path()), (&mut vb, b.path())] {
                *s = s.replace(&d.to_string_lossy().into_owned(), "OUT");
            }
        }
        assert_eq!(va, vb, "{k} differs");
    }
    for f in ["margins.csv", "modes.csv", "weights.csv", "carleman.csv", "near_origin.csv", "lemmas.csv"] {
        assert!(sa.contains_key(f), "{f} missing");
    }
}

#[test]
fn jobs_env_fallback_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("free_inequality.json");
    let o = forge(
        &["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        &[("CARLEMAN_FORGE_JOBS", "2")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = forge(
        &["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        &[("CARLEMAN_FORGE_JOBS", "many")],
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(forge(&["run"], &[]).status.code(), Some(3));
    assert_eq!(forge(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn csv_only_output_skips_json_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"campaign": "phase-scaling", "output": {"formats": ["csv"]}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = forge(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("phase_scaling.csv").exists());
    assert!(!out.join("phase_scaling.json").exists());
    assert!(out.join("report.json").exists());
}

#[test]
fn defaults_command_prints_a_loadable_config() {
    let o = forge(&["defaults"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["campaign"], "all");
    assert_eq!(v["construction"]["eps_exponent"], 0.7);
}

#[test]
fn all_campaigns_pass_for_the_delta_1_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{}").unwrap();
    let out = dir.path().join("out");
    let o = forge(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stderr(&o), String::from_utf8_lossy(&o.stdout));
    for f in [
        "report.json",
        "validate.json",
        "threshold.json",
        "inequality.csv",
        "inequality.json",
        "lemmas.csv",
        "lemmas.json",
        "phase_scaling.csv",
        "phase_scaling.json",
        "resolvent.csv",
        "resolvent.json",
        "carleman.csv",
        "near_origin.csv",
        "carleman.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let r = report(&out);
    assert_eq!(r["passed"], true);
    assert!(r["calibration"]["tau"].as_f64().unwrap() >= 1.0);
}
