use std::path::PathBuf;
use std::process::{Command, Output};

use theta_core::schwartz::SchwartzFn;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn theta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_theta"))
        .args(args)
        .env_remove("THETA_PRECISION")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn symbol_lines(text: &str) -> Vec<(String, String)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split_whitespace();
            (
                it.next().unwrap().to_string(),
                it.next().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn hilbert_minus_one() {
    let o = theta(&["hilbert", "-a", "-1", "-b", "-1", "--places", "2,3,5,7,inf"]);
    assert!(o.status.success());
    let rows = symbol_lines(&stdout(&o));
    let get = |k: &str| rows.iter().find(|(p, _)| p == k).unwrap().1.clone();
    assert_eq!(get("2"), "-1");
    assert_eq!(get("inf"), "-1");
    assert_eq!(get("3"), "+1");
    assert_eq!(get("product"), "+1");
}

#[test]
fn hilbert_trivial_and_default_places() {
    let o = theta(&["hilbert", "-a", "1", "-b", "-7/3"]);
    assert!(o.status.success());
    let rows = symbol_lines(&stdout(&o));
    assert!(rows.iter().all(|(_, s)| s == "+1"));
    let places: Vec<&str> = rows.iter().map(|(p, _)| p.as_str()).collect();
    assert_eq!(places, ["2", "3", "7", "inf", "product"]);

    let o = theta(&["hilbert", "-a", "2", "-b", "5"]);
    let rows = symbol_lines(&stdout(&o));
    let expect = [("2", "-1"), ("5", "-1"), ("inf", "+1"), ("product", "+1")];
    let rows: Vec<(&str, &str)> = rows.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    assert_eq!(rows, expect);
}

#[test]
fn hilbert_usage_error() {
    let o = theta(&["hilbert", "-a", "0", "-b", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

fn transform_matches_golden(config: &str, phi: &str, expected: &str, mode: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phi0.json");
    let o = theta(&[
        "transform",
        "--config",
        golden(config).to_str().unwrap(),
        "--phi",
        golden(phi).to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains(mode));
    let got = std::fs::read(&out).unwrap();
    assert_eq!(got, std::fs::read(golden(expected)).unwrap());
    // re-parse and re-serialize
    let text = String::from_utf8(got).unwrap();
    assert_eq!(SchwartzFn::from_json(&text).unwrap().to_json(), text);
}

#[test]
fn transform_standard_lattice_golden() {
    transform_matches_golden(
        "split_p3.json",
        "char_lattice_p3.json",
        "char_lattice_p3.phi0.json",
        "constant",
    );
    let phi0 = SchwartzFn::from_json(
        &std::fs::read_to_string(golden("char_lattice_p3.phi0.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(phi0, SchwartzFn::char_lattice(1, 3, 0));
}

#[test]
fn transform_zero_golden() {
    transform_matches_golden(
        "split_p3.json",
        "zero_p3.json",
        "zero_p3.phi0.json",
        "constant",
    );
}

#[test]
fn transform_division_is_odd_and_vanishes_near_zero() {
    transform_matches_golden(
        "division_p3.json",
        "odd_p3.json",
        "odd_p3.phi0.json",
        "vanishing",
    );
    let phi0 = SchwartzFn::from_json(&std::fs::read_to_string(golden("odd_p3.phi0.json")).unwrap())
        .unwrap();
    assert!(!phi0.is_zero());
    assert!(phi0.reflect().approx_eq(&phi0.scale((-1.0).into()), 0.0));
    assert_eq!(phi0.value_at(&[0]), 0.0.into());
}

#[test]
fn transform_inadmissible_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"p": 3, "a": "-1", "b": "3", "kappa": "-1"}"#).unwrap();
    let o = theta(&[
        "transform",
        "--config",
        cfg.to_str().unwrap(),
        "--phi",
        golden("char_lattice_p3.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

fn verify(config: &str, suite: &str, seed: &str) -> (Output, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = theta(&[
        "verify",
        "--config",
        config,
        "--suite",
        suite,
        "--seed",
        seed,
        "-o",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap_or_default();
    (o, text)
}

#[test]
fn verify_fl_passes_and_is_deterministic() {
    let cfg = golden("split_p3.json");
    let (o, a) = verify(cfg.to_str().unwrap(), "fl", "7");
    assert_eq!(o.status.code(), Some(0));
    let (_, b) = verify(cfg.to_str().unwrap(), "fl", "7");
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["summary"]["failed"], 0);
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn verify_parity_division_records_invariant() {
    let cfg = golden("division_p3.json");
    let (o, a) = verify(cfg.to_str().unwrap(), "parity", "1");
    assert_eq!(o.status.code(), Some(0));
    let (_, b) = verify(cfg.to_str().unwrap(), "parity", "1");
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let reps = v["reports"].as_array().unwrap();
    assert!(reps.iter().any(|r| r["params"]["inv"] == "-1"));
}

#[test]
fn verify_exit_code_tracks_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"p": 3, "a": "1", "b": "1", "kappa": "1", "tol": -1.0}"#,
    )
    .unwrap();
    let (o, text) = verify(cfg.to_str().unwrap(), "parity", "0");
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["summary"]["failed_blocking"].as_u64().unwrap() > 0);
}

#[test]
fn precision_variable_is_checked() {
    let o = Command::new(env!("CARGO_BIN_EXE_theta"))
        .args([
            "verify",
            "--config",
            golden("split_p3.json").to_str().unwrap(),
            "--suite",
            "fl",
        ])
        .env("THETA_PRECISION", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
