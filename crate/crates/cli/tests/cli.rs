//! End-to-end runs of the `aircomp` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aircomp::constellation::{Constellation, FunctionTable};
use aircomp::domain::{FunctionKind, FunctionSpec, Interval};
use aircomp::modem::SchemeConfig;
use aircomp::sim::{csi_error_scenario, Scenario, SchemeChoice};
use aircomp::Complex64;
use serde_json::Value;
use tempfile::TempDir;

fn aircomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aircomp")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

fn small_scenario() -> Scenario {
    csi_error_scenario(&[2, 4], &[10.0, 20.0], &[0.0, 30.0], 200, 5).unwrap()
}

fn write_scenario(dir: &Path, s: &Scenario) -> String {
    let p = dir.join("scenario.json");
    fs::write(&p, serde_json::to_string_pretty(s).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_results_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let scen = write_scenario(tmp.path(), &small_scenario());
    let out = tmp.path().join("out");
    let o = aircomp(&["run", "--scenario", &scen, "--out", s(&out), "--workers", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
    assert!(csv.starts_with("series,num_nodes,snr_db"));
    let json: Value = serde_json::from_str(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(json[0]["result"]["points"].as_array().unwrap().len(), 8);
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 5);
    assert_eq!(m["scenario_hash"], small_scenario().hash().unwrap());
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let tmp = TempDir::new().unwrap();
    let scen = write_scenario(tmp.path(), &small_scenario());
    let mut csvs = Vec::new();
    for w in ["1", "3"] {
        let out = tmp.path().join(format!("w{w}"));
        let o = aircomp(&["run", "--scenario", &scen, "--out", s(&out), "--workers", w, "--format", "csv"]);
        assert_eq!(code(&o), 0);
        assert!(!out.join("results.json").exists());
        csvs.push(fs::read_to_string(out.join("results.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn seed_override_changes_results() {
    let tmp = TempDir::new().unwrap();
    let scen = write_scenario(tmp.path(), &small_scenario());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(code(&aircomp(&["run", "--scenario", &scen, "--out", s(&a), "--format", "csv"])), 0);
    assert_eq!(code(&aircomp(&["run", "--scenario", &scen, "--out", s(&b), "--seed", "6", "--format", "csv"])), 0);
    assert_ne!(fs::read_to_string(a.join("results.csv")).unwrap(), fs::read_to_string(b.join("results.csv")).unwrap());
}

#[test]
fn compare_labels_each_scheme() {
    let tmp = TempDir::new().unwrap();
    let mut base = small_scenario();
    base.function = FunctionSpec::new(FunctionKind::Sum, Interval::new(1.0, 8.0).unwrap(), 4).unwrap();
    base.channel = Default::default();
    let scen = write_scenario(tmp.path(), &base);
    let schemes = tmp.path().join("schemes.json");
    fs::write(
        &schemes,
        r#"[{"label": "analog", "config": {"scheme": "analog_da"}},
            {"label": "sumcomp", "config": {"scheme": "sum_comp", "levels": 8, "base": 8}}]"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = aircomp(&["compare", "--scenario", &scen, "--schemes", s(&schemes), "--out", s(&out), "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("analog,")).count(), 8);
    assert_eq!(csv.lines().filter(|l| l.starts_with("sumcomp,")).count(), 8);
}

#[test]
fn overlapping_constellation_exits_with_constraint_code() {
    let tmp = TempDir::new().unwrap();
    let values = vec![-2.0, -1.0, 1.0, 2.0];
    let table = FunctionTable::from_levels(&values, 2, |v| v.iter().sum()).unwrap();
    let pts = vec![
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    let cons = Constellation::new(vec![pts; 2], vec![1.0; 2], table)
        .unwrap()
        .with_level_values(values)
        .unwrap();
    let path = tmp.path().join("c.json");
    fs::write(&path, serde_json::to_string(&cons).unwrap()).unwrap();
    let o = aircomp(&["check-constellation", "--in", s(&path)]);
    assert_eq!(code(&o), 3);
    let err = stderr_json(&o);
    assert_eq!(err["error"], "constraint");
    let msg = err["message"].as_str().unwrap();
    assert!(msg.contains("f=-3") && msg.contains("f=3"), "{msg}");
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["feasible"], false);
}

#[test]
fn designed_constellation_passes_the_checker() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("design");
    let o = aircomp(&[
        "design-constellation", "--function", "sum", "--levels", "3", "--nodes", "2", "--restarts", "4",
        "--iterations", "200", "--seed", "9", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 9);
    let o = aircomp(&["check-constellation", "--in", s(&out.join("constellation.json"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn power_policy_for_equal_channels() {
    let o = aircomp(&["power-policy", "--channels", "[2.0, 2.0]", "--budgets", "[1.0, 1.0]", "--noise", "0.1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    // both nodes saturate, so eta = ((noise + sum g) / sum sqrt g)^2
    assert!((v["eta"].as_f64().unwrap() - (8.1f64 / 4.0).powi(2)).abs() < 1e-12);
    assert_eq!(v["powers"], serde_json::json!([1.0, 1.0]));
}

#[test]
fn figure_bundles_have_expected_series() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig7a");
    let o = aircomp(&["figure", "fig7a", "--out", s(&out), "--trials", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
    let mut series: Vec<&str> = plot.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    series.dedup();
    assert_eq!(series.len(), 6, "{series:?}");

    let out = tmp.path().join("fig9");
    let o = aircomp(&["figure", "fig9", "--out", s(&out), "--trials", "50"]);
    assert_eq!(code(&o), 0);
    let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
    let mut series: Vec<&str> = plot.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    series.dedup();
    assert_eq!(series, ["snr=0dB", "snr=10dB", "snr=20dB", "snr=30dB"]);

    // the emitted scenario reproduces the bundle
    let again = tmp.path().join("again");
    let scen = out.join("scenario.json");
    let o = aircomp(&["run", "--scenario", s(&scen), "--out", s(&again), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let first = fs::read_to_string(out.join("results.csv")).unwrap().replace("fig9,", "");
    let second = fs::read_to_string(again.join("results.csv")).unwrap();
    let second = second.split_once('\n').unwrap().1.lines().map(|l| l.split_once(',').unwrap().1);
    let first = first.split_once('\n').unwrap().1.lines();
    assert!(first.eq(second));
}

#[test]
fn bad_inputs_exit_with_usage_code() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&aircomp(&["figure", "fig99", "--out", s(tmp.path())])), 2);
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let o = aircomp(&["run", "--scenario", s(&bad), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["error"], "malformed_input");
    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&aircomp(&["run", "--scenario", s(&missing), "--out", s(&tmp.path().join("o"))])), 2);
    let o = aircomp(&["power-policy", "--channels", "[1.0]", "--budgets", "[1.0, 2.0]", "--noise", "0.1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unsupported_pairing_exits_with_constraint_code() {
    let tmp = TempDir::new().unwrap();
    let mut sc = small_scenario();
    sc.function = FunctionSpec::new(FunctionKind::Maximum { p0: 1.0 }, Interval::new(0.0, 1.0).unwrap(), 4).unwrap();
    sc.scheme = SchemeChoice::Modem(SchemeConfig::DigitalBitwise { base: 2, digits: 3 });
    let scen = write_scenario(tmp.path(), &sc);
    let o = aircomp(&["run", "--scenario", &scen, "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_json(&o)["error"], "unsupported");
}

#[test]
fn list_schemes_names_every_scheme() {
    let o = aircomp(&["list-schemes"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["analog_da", "tbma_fsk", "sum_comp", "channel_comp", "constellation"] {
        assert!(text.contains(name), "{name} missing");
    }
}
