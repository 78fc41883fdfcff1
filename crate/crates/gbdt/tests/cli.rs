//! Exit-code contract of the `gbdt` binary: 0 all checks pass, 1 check or
//! engine failure, 2 input error. Also covers the GBDT_SEED override.

use std::path::Path;
use std::process::Command;

fn gbdt() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gbdt"));
    c.env_remove("GBDT_SEED");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const GOOD_SCENARIO: &str = r#"{
  "triple": {"generate": {"n": 2, "m1": 1, "m2": 1, "seed": 17, "spectrum": "any"}},
  "engine": "explicit",
  "grid": {"x0": 0.0, "x1": 1.0, "nx": 10, "t0": 0.0, "t1": 1.0, "nt": 10},
  "checks": ["identity", "identity_propagation", "j_unitarity"]
}"#;

#[test]
fn exit_zero_on_passing_checks() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "good.json", GOOD_SCENARIO);
    let out = gbdt().args(["check", &s]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_one_on_check_failure() {
    // inline triple violating AS0 - S0A* = i Pi0 j Pi0*
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "bad_triple.json",
        r#"{
  "triple": {"n": 1, "m1": 1, "m2": 1,
             "A": [[[0.0, 0.5]]], "S0": [[[1.0, 0.0]]],
             "Pi0": [[[3.0, 0.0], [1.0, 0.0]]]},
  "engine": "explicit",
  "grid": {"x0": 0.0, "x1": 1.0, "nx": 10, "t0": 0.0, "t1": 1.0, "nt": 10}
}"#,
    );
    let out = gbdt().args(["check", &s]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_two_on_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "broken.json", "{ not json");
    for args in [vec!["check", s.as_str()], vec!["solve", s.as_str()]] {
        let out = gbdt().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
    let out = gbdt().args(["check", "/nonexistent/path.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_two_on_bad_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "good.json", GOOD_SCENARIO);
    let out = gbdt().env("GBDT_SEED", "not-a-number").args(["check", &s]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_env_overrides_scenario_seed() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "good.json", GOOD_SCENARIO);
    let base = gbdt().args(["solve", &s]).output().unwrap();
    let same = gbdt().env("GBDT_SEED", "17").args(["solve", &s]).output().unwrap();
    let other = gbdt().env("GBDT_SEED", "99").args(["solve", &s]).output().unwrap();
    assert!(base.status.success() && same.status.success() && other.status.success());
    assert_eq!(base.stdout, same.stdout, "explicit seed 17 must match the scenario seed");
    assert_ne!(base.stdout, other.stdout, "a different seed must change the field");
}

#[test]
fn triple_roundtrip_verify() {
    // generate emits a triple that verify accepts
    let gen = gbdt()
        .args(["triple", "generate", "--n", "2", "--m1", "2", "--m2", "1", "--seed", "3"])
        .output()
        .unwrap();
    assert!(gen.status.success());
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "triple.json", &String::from_utf8(gen.stdout).unwrap());
    let ver = gbdt().args(["triple", "verify", &p]).output().unwrap();
    assert_eq!(ver.status.code(), Some(0), "{}", String::from_utf8_lossy(&ver.stdout));
}

#[test]
fn triple_complete_solves_for_s0() {
    let dir = tempfile::tempdir().unwrap();
    // A = i/2, Pi0 = (sqrt(2), 1): completion must recover S0 = 1
    let p = write(
        dir.path(),
        "partial.json",
        r#"{"n": 1, "m1": 1, "m2": 1,
  "A": [[[0.0, 0.5]]],
  "Pi0": [[[1.4142135623730951, 0.0], [1.0, 0.0]]]}"#,
    );
    let out = gbdt().args(["triple", "complete", &p]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let s00 = v["S0"][0][0][0].as_f64().unwrap();
    assert!((s00 - 1.0).abs() < 1e-12, "S0 = {s00}");
}
