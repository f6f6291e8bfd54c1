use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMOKE_PROFILE: &str = r#"{"R": 1, "a": "identity", "sigma1": 1, "sigma2": 4, "Lambda": 10, "t_max": 80}"#;

fn teig(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teig"))
        .args(args)
        .current_dir(dir)
        .env_remove("TEIG_THREADS")
        .output()
        .expect("binary runs")
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sigma14.json"), SMOKE_PROFILE).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn weyl_prints_five_quarters() {
    let dir = workspace();
    let o = teig(dir.path(), &["weyl", "--profile", "sigma14.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1.25");
}

#[test]
fn missing_profile_is_a_usage_error_naming_the_path() {
    let dir = workspace();
    let o = teig(dir.path(), &["weyl", "--profile", "no/such/profile.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no/such/profile.json"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_one() {
    let dir = workspace();
    assert_eq!(teig(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(teig(dir.path(), &["weyl"]).status.code(), Some(1));
    let o = teig(dir.path(), &["hs-scan", "--profile", "sigma14.json", "--modes", "4:1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let dir = workspace();
    let o = teig(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("counting-fit"));
}

#[test]
fn invalid_thread_count_is_rejected() {
    let dir = workspace();
    let o = Command::new(env!("CARGO_BIN_EXE_teig"))
        .args(["weyl", "--profile", "sigma14.json"])
        .current_dir(dir.path())
        .env("TEIG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("TEIG_THREADS"));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn counting_fit_smoke_run_writes_csv_summary_and_manifest() {
    let dir = workspace();
    let o = teig(dir.path(), &["counting-fit", "--profile", "sigma14.json", "--points", "9"]);
    // t_max = 80 is far from asymptotic; the verdict may go either way
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("fit.csv"));
    assert!(rows.len() >= 5);
    for r in &rows {
        assert_eq!(r.len(), 4);
        let ratio: f64 = r[3].parse().unwrap();
        assert!(ratio.is_finite());
    }
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert!((summary["c_analytic"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["command"], "counting-fit");
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(manifest["versions"]["teig"].is_string());
}

#[test]
fn counting_fit_failure_exits_two_and_still_writes_fit_csv() {
    let dir = workspace();
    let o = teig(
        dir.path(),
        &["counting-fit", "--profile", "sigma14.json", "--slope-tol", "1e-9", "--ratio-tol", "1e-9"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("acceptance failure"));
    assert!(dir.path().join("fit.csv").is_file());
    assert!(dir.path().join("fit.manifest.json").is_file());
}

#[test]
fn rerun_hits_the_spectrum_cache_and_reproduces_outputs() {
    let dir = workspace();
    let args = ["counting-fit", "--profile", "sigma14.json", "--ratio-tol", "1"];
    let first = teig(dir.path(), &args);
    let csv1 = fs::read(dir.path().join("fit.csv")).unwrap();
    let json1 = fs::read(dir.path().join("fit.json")).unwrap();
    let second = teig(dir.path(), &args);
    assert_eq!(first.status.code(), second.status.code());
    assert_eq!(csv1, fs::read(dir.path().join("fit.csv")).unwrap());
    assert_eq!(json1, fs::read(dir.path().join("fit.json")).unwrap());
    let manifest = fs::read_to_string(dir.path().join("fit.manifest.json")).unwrap();
    assert!(manifest.contains("spectrum cache hit"), "{manifest}");
}

#[test]
fn disk_eigs_lists_conjugate_pairs() {
    let dir = workspace();
    let o = teig(dir.path(), &["disk-eigs", "--profile", "sigma14.json", "--out", "out/eigs.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/eigs.csv"));
    let total: u32 = rows.iter().map(|r| r[4].parse::<u32>().unwrap()).sum();
    assert_eq!(total, 74);
    // spectra are cached next to the output by default
    assert!(fs::read_dir(dir.path().join("out"))
        .unwrap()
        .any(|e| e.unwrap().file_name().to_string_lossy().starts_with("spectrum-")));
    let im_sum: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!(im_sum.abs() < 1e-9);
}

#[test]
fn trace_check_emits_lhs_rhs_ratio() {
    let dir = workspace();
    let o = teig(dir.path(), &["trace-check", "--profile", "sigma14.json", "--t", "1e3", "--tol", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    for key in ["lhs", "rhs", "ratio"] {
        assert!(v[key]["re"].is_f64() && v[key]["im"].is_f64(), "{key}");
    }
    assert!((v["ratio"]["re"].as_f64().unwrap() - 1.0).abs() < 0.01);
}

#[test]
fn halfspace_suite_passes() {
    let dir = workspace();
    let o = teig(dir.path(), &["halfspace", "--samples", "300", "--out", "hs.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("hs.manifest.json").is_file());
}

#[test]
fn cauchy_eig_finds_the_small_mode_zero_eigenvalues() {
    let dir = workspace();
    let o = teig(
        dir.path(),
        &["cauchy-eig", "--profile", "sigma14.json", "--center-re", "-8", "--radius", "6", "--N", "128"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("cauchy_eigs.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().any(|r| (r[0].parse::<f64>().unwrap() + 11.45).abs() < 0.01));
}

#[test]
fn resolvent_scan_meets_its_slopes() {
    let dir = workspace();
    let o = teig(dir.path(), &["resolvent-scan", "--profile", "sigma14.json", "--N", "128"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv_rows(&dir.path().join("resolvent.csv")).len(), 2 * 5 * 2);
}

#[test]
fn selfcheck_passes() {
    let dir = workspace();
    let o = teig(dir.path(), &["selfcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn disk_eigs_with_inline_medium_writes_spectrum_json() {
    let dir = workspace();
    let o = teig(
        dir.path(),
        &["disk-eigs", "--sigma1", "1", "--sigma2", "4", "--tmax", "80", "--out", "spectrum.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(v["medium"]["sigma2"], 4.0);
    assert!(v["lambda_floor"].is_f64());
    let entries = v["entries"].as_array().unwrap();
    let total: u64 = entries.iter().map(|e| e["mult"].as_u64().unwrap()).sum();
    assert_eq!(total, 74);
    for key in ["re", "im", "mult", "mode"] {
        assert!(entries[0].get(key).is_some(), "{key}");
    }
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum.manifest.json")).unwrap()).unwrap();
    assert!(manifest["config"]["profile_path"].is_null());
}
