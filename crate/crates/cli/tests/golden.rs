//! Runs the binary on every file in `scenarios/` and compares
//! `results.json` with `tests/golden/<name>.json`. Set `UPDATE_GOLDEN=1`
//! to rewrite the golden files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> PathBuf {
    root().join("scenarios").join(format!("{name}.toml"))
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liftwalk"))
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

/// Runs a scenario, checks exit 0 and the golden file, returns the parsed
/// results and the output directory.
fn golden(name: &str) -> (Value, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&scenario(name), dir.path(), &["--verify"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{name}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("results.json")).unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &text).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(text, expected, "{name}: results.json differs from golden");
    (serde_json::from_str(&text).unwrap(), dir)
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn cycle_qw_reports_tau_above_conductance_bound() {
    let (r, dir) = golden("cycle_qw");
    let lb = &r["lower_bound"];
    // cycle with loops under the uniform distribution: Φ = 2/N
    assert!((num(&lb["phi"]) - 2.0 / 16.0).abs() < 1e-12);
    assert!((num(&lb["bound"]) - 2.0).abs() < 1e-12);
    let tau = num(&r["mixing"][0]["tau"]);
    assert!(tau >= num(&lb["bound"]));
    assert_eq!(lb["holds"], Value::Bool(true));
    assert!(num(&r["mixing"][1]["tau"]) >= tau);
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows[0], ["t", "max_tv", "argmax_start"]);
    assert_eq!(rows.len(), 1 + 641);
    assert!(dir.path().join("channel.json").exists());
}

#[test]
fn cycle_lmc_golden() {
    let (r, dir) = golden("cycle_lmc");
    assert_eq!(r["params"]["lazy"], Value::Bool(false));
    assert!((num(&r["params"]["alpha"]) - 1.0 / 9.0).abs() < 1e-12);
    assert!(r["mixing"][0]["tau"].is_u64());
    assert!(dir.path().join("transition.csv").exists());
    assert!(dir.path().join("transition.json").exists());
}

#[test]
fn classical_walk_golden() {
    let (r, _dir) = golden("classical_walk");
    // diffusive: τ(1/4) of order N² on the 9-cycle
    let tau = num(&r["mixing"][0]["tau"]);
    assert!(tau > 9.0, "τ = {tau}");
    assert_eq!(r["lower_bound"]["holds"], Value::Bool(true));
}

#[test]
fn torus_lmc_golden() {
    let (r, _dir) = golden("torus_lmc");
    assert_eq!(r["nodes"], 25);
    assert_eq!(r["verify"]["doubly_stochastic"], Value::Bool(true));
    assert!((num(&r["lower_bound"]["phi"]) - 0.25).abs() < 1e-9);
}

#[test]
fn scaling_sweep_one_row_per_size() {
    let (r, dir) = golden("scaling_cycle_lmc");
    let rows = csv_rows(&dir.path().join("scaling.csv"));
    assert_eq!(rows[0], ["size", "nodes", "tau_0.25"]);
    assert_eq!(rows.len(), 4);
    let taus: Vec<f64> = rows[1..].iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(taus.windows(2).all(|w| w[0] < w[1]));
    let e = num(&r["fits"][0]["exponent"]);
    assert!((0.8..=1.3).contains(&e), "exponent {e}");
}

#[test]
fn bridge_build_golden() {
    let (r, dir) = golden("bridge_build");
    assert_eq!(r["files"], 5 * 4);
    assert!(num(&r["max_product_residual"]) <= 1e-8);
    assert!(num(&r["min_flow_value"]) >= 1.0 - 1e-9);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bridges/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().unwrap().len(), 20);
    assert!(dir.path().join("bridges/bridge_s5_t4.csv").exists());
}

#[test]
fn lift_build_on_cycle_walk() {
    let (r, dir) = golden("lift_build");
    assert!(num(&r["max_residual"]) <= 1e-8);
    assert_eq!(r["local"], Value::Bool(true));
    // states (v0, l, v) with l ≤ T
    assert_eq!(r["states"], 8 * 7 * 8);
    let rows = csv_rows(&dir.path().join("lift_triplets.csv"));
    assert_eq!(rows[0], ["from", "to", "probability"]);
    assert_eq!(rows.len() as u64 - 1, r["transitions"].as_u64().unwrap());
    assert!(dir.path().join("lift_layout.json").exists());
}

#[test]
fn amplified_lift_golden() {
    let (r, _dir) = golden("lift_amplified");
    assert_eq!(r["amplified"], Value::Bool(true));
    assert_eq!(r["verify_horizon"], 15);
    assert!(num(&r["max_residual"]) <= 1e-8);
}

#[test]
fn conductance_reports_witness_cut() {
    let (r, dir) = golden("conductance");
    assert!((num(&r["phi"]) - 2.0 / 12.0).abs() < 1e-12);
    let cut = r["witness_cut"].as_array().unwrap();
    assert_eq!(cut.len(), 6);
    let file: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("conductance.json")).unwrap()).unwrap();
    assert_eq!(file["witness_cut"], r["witness_cut"]);
    assert!(dir.path().join("witness_chain.csv").exists());
}

#[test]
fn lower_bound_on_random_reversible_chain() {
    let (r, _dir) = golden("lower_bound");
    assert_eq!(r["holds"], Value::Bool(true));
    assert_eq!(r["invariant"], Value::Bool(true));
    assert_eq!(r["locality"], "trace-scan");
    let tau = num(&r["tau"]);
    assert!(tau >= num(&r["bound"]) - 1.0);
}

#[test]
fn lattice_lemmas_golden() {
    let (r, _dir) = golden("lattice_lemmas");
    let rep = &r["report"];
    assert_eq!(rep["axis_holds"], Value::Bool(true));
    assert_eq!(rep["contraction_holds"], Value::Bool(true));
    assert_eq!(rep["horizon"], r["proof_horizon"]);
    assert!((num(&rep["coin_toss_probability"]) - 2.0 * 0.8f64.powi(9)).abs() < 1e-12);
}

#[test]
fn multiscale_series_csv() {
    let (r, dir) = golden("multiscale");
    let rows = csv_rows(&dir.path().join("multiscale.csv"));
    assert_eq!(rows[0], ["t", "qw_tv", "lmc_tv"]);
    assert_eq!(rows.len(), 1 + 17);
    assert_eq!(rows[1], ["0", "0", "0"]);
    assert!(num(&r["qw_tv"]) < num(&r["lmc_tv"]));
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run(&scenario("lower_bound"), d.path(), &["--seed", "7"]).status.code(), Some(0));
    }
    let ra = fs::read(a.path().join("results.json")).unwrap();
    assert_eq!(ra, fs::read(b.path().join("results.json")).unwrap());
    let c = tempfile::tempdir().unwrap();
    run(&scenario("lower_bound"), c.path(), &["--seed", "8"]);
    assert_ne!(ra, fs::read(c.path().join("results.json")).unwrap());
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "kind = \"cycle-qw\"\ncycle.n = \n",
        "kind = \"spiral\"\n",
        "kind = \"cycle-qw\"\n",
        "kind = \"cycle-qw\"\ncycle.n = 8\ncycle.q = 2.0\n",
        "kind = \"lift-build\"\nprocess.kind = \"cycle-qw\"\ncycle.n = 4\n",
        "kind = \"multiscale\"\nmultiscale.n = 8\nmultiscale.t = 8\n",
    ];
    for (k, text) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("bad{k}.toml"));
        fs::write(&cfg, text).unwrap();
        let out = run(&cfg, &dir.path().join("out"), &[]);
        assert_eq!(out.status.code(), Some(1), "case {k}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "case {k}");
    }
    let out = run(&dir.path().join("missing.toml"), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_assertion_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    // after 3 steps most of the torus is still unreached
    fs::write(&cfg, "kind = \"lattice-lemmas\"\ntorus.m = 5\ntorus.d = 1\nlattice.horizon = 3\n").unwrap();
    let out = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let r: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/results.json")).unwrap()).unwrap();
    assert_eq!(r["status"], "failed");
    assert_eq!(r["report"]["contraction_holds"], Value::Bool(false));
}

#[test]
fn horizon_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&scenario("cycle_lmc"), dir.path(), &["--horizon", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(r["horizon"], 50);
    assert_eq!(csv_rows(&dir.path().join("trajectory.csv")).len(), 52);
}
