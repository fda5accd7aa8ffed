use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwlab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Runs a config into `out` and returns the exit code and the run directory.
fn run_into(config: &Path, out: &Path, extra: &[&str]) -> (i32, PathBuf) {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = dwlab(&args);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let dir = stdout.lines().last().and_then(|l| l.split(" -> ").nth(1)).expect("run directory reported");
    (o.status.code().unwrap(), PathBuf::from(dir))
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

#[test]
fn catalog_lists_eight_kinds_stably() {
    let a = dwlab(&["list-experiments"]);
    let b = dwlab(&["list-experiments"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 8);
    for e in entries {
        assert!(!e["anchor"].as_str().unwrap().is_empty());
        assert!(!e["summary"].as_str().unwrap().is_empty());
    }
}

#[test]
fn jr_run_persists_a_passing_result() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "jr.toml", "kind = \"jr\"\n[geometry]\nsites = 512\nextent = 40.0\n[operator]\nmasses = [1.0]\n");
    let (code, dir) = run_into(&cfg, tmp.path(), &[]);
    assert_eq!(code, 0);
    let r = result(&dir);
    assert_eq!(r["integers"]["zero_modes_m0"], 1);
    assert_eq!(r["integers"]["zero_mode_chirality_m0"], -1);
    assert!(r["ledger"].as_array().unwrap().iter().all(|e| e["passed"] == true));
    let decay = r["report"]["masses"][0]["localization"]["fitted_decay_rate"].as_f64().unwrap();
    assert!((decay - 1.0).abs() <= 0.02);
    assert_eq!(r["artifact_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    for f in ["spectrum_m0.csv", "eigenvalue_histogram_m0.csv", "mode_profile_m0.csv", "kappa_profile.csv", "config.toml"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let spectrum = fs::read_to_string(dir.join("spectrum_m0.csv")).unwrap();
    assert_eq!(spectrum.lines().next(), Some("index,eigenvalue"));
    assert_eq!(spectrum.lines().count(), 1 + 2 * 512 - 1);
}

#[test]
fn reruns_reproduce_and_never_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.toml", "kind = \"gap-scan\"\n[scan]\nm_values = [0.01, 0.2, 1.0]\n");
    let (c1, d1) = run_into(&cfg, tmp.path(), &["--threads", "1"]);
    let (c2, d2) = run_into(&cfg, tmp.path(), &["--threads", "1"]);
    assert_eq!((c1, c2), (0, 0));
    assert_ne!(d1, d2);
    assert!(d2.to_str().unwrap().ends_with(".1"));
    let (mut a, mut b) = (result(&d1), result(&d2));
    a.as_object_mut().unwrap().remove("timings");
    b.as_object_mut().unwrap().remove("timings");
    assert_eq!(a, b);
    assert_eq!(fs::read(d1.join("gap_scan.csv")).unwrap(), fs::read(d2.join("gap_scan.csv")).unwrap());
}

#[test]
fn thread_count_does_not_change_integers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.toml", "kind = \"as-eta\"\nseed = 3\n[scan]\ninstances = 6\n");
    let (_, d1) = run_into(&cfg, tmp.path(), &["--threads", "1"]);
    let (_, d2) = run_into(&cfg, tmp.path(), &["--threads", "3"]);
    assert_eq!(result(&d1)["integers"], result(&d2)["integers"]);
    assert_eq!(fs::read(d1.join("as_eta.csv")).unwrap(), fs::read(d2.join("as_eta.csv")).unwrap());
}

#[test]
fn as_eta_on_the_chiral_torus_is_equal() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", "kind = \"as-eta\"\n[operator]\nscheme = \"spectral-chiral\"\nmasses = [0.5]\n");
    let (code, dir) = run_into(&cfg, tmp.path(), &[]);
    assert_eq!(code, 0);
    let r = result(&dir);
    assert_eq!(r["report"]["comparisons"][0]["report"]["equal"], true);
}

#[test]
fn negative_mass_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "kind = \"jr\"\n[operator]\nmasses = [-1.0]\n");
    for cmd in ["run", "validate"] {
        let o = dwlab(&[cmd, cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8(o.stderr).unwrap().contains("operator.masses[0]"));
    }
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1, "nothing but the config was written");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(dwlab(&["frobnicate"]).status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "jr.toml", "kind = \"jr\"\n");
    assert_eq!(dwlab(&["excision", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(dwlab(&["run", tmp.path().join("missing.toml").to_str().unwrap()]).status.code(), Some(2));
    let v = dwlab(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));
}

#[test]
fn module_errors_are_recorded_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.toml", "kind = \"as-eta\"\n[operator]\nscheme = \"wilson\"\n");
    let (code, dir) = run_into(&cfg, tmp.path(), &[]);
    assert_eq!(code, 1);
    let r = result(&dir);
    assert_eq!(r["passed"], false);
    assert_eq!(r["ledger"][0]["name"], "module_error");
}

#[test]
fn results_validate_against_the_published_schema() {
    let schemas: Value = serde_json::from_slice(&dwlab(&["schema"]).stdout).unwrap();
    let result_schema = jsonschema::JSONSchema::compile(&schemas["result"]).unwrap();
    let config_schema = jsonschema::JSONSchema::compile(&schemas["config"]).unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "x.toml", "kind = \"excision\"\n");
    let (code, dir) = run_into(&cfg, tmp.path(), &[]);
    assert_eq!(code, 0);
    let r = result(&dir);
    assert!(result_schema.is_valid(&r));
    assert!(config_schema.is_valid(&r["config"]));
    assert_eq!(r["integers"]["count_l"], r["integers"]["count_l_prime"]);
    // Every constant entering the mass bound is echoed.
    for key in ["c1_sq", "c2_sq", "c0"] {
        assert!(r["report"].to_string().contains(&format!("\"{key}\"")), "{key}");
    }
}

#[test]
fn echoed_config_reparses_to_the_same_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.toml", "kind = \"aps-index\"\n[geometry]\nconjugate = true\n");
    let (code, dir) = run_into(&cfg, tmp.path(), &[]);
    assert_eq!(code, 0);
    let r = result(&dir);
    assert_eq!(r["integers"]["aps_index"], -1);
    let v = dwlab(&["validate", dir.join("config.toml").to_str().unwrap()]);
    let out = String::from_utf8(v.stdout).unwrap();
    assert!(out.contains(r["config_hash"].as_str().unwrap()), "{out}");
}
