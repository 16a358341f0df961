//! End-to-end checks of the binary: exit codes, JSON output shape,
//! configuration files and overrides, CSV output.

use std::io::Write;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relcm"))
}

#[test]
fn eval_base_case_is_unity() {
    let out = bin()
        .args([
            "eval", "--n", "1", "--x", "0.5", "--y", "2.0", "--aplus", "1", "--aminus", "1",
            "--b", "0.5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value_re"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["value_im"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["evaluations"].as_u64().is_some());
}

#[test]
fn eval_matches_repeat_run_bit_for_bit() {
    let args = [
        "eval", "--n", "2", "--x", "0.3,-0.2", "--y", "1.0,-1.0", "--aplus", "1", "--aminus",
        "1", "--b", "0.5", "--function", "j",
    ];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn coupling_outside_strip_exits_2() {
    let out = bin()
        .args(["eval", "--n", "1", "--x", "0.5", "--y", "2.0", "--b", "2.1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("S_a"), "stderr: {msg}");
}

#[test]
fn malformed_config_exits_1_naming_field() {
    let out = bin()
        .args(["eval", "--n", "2", "--x", "0.1", "--y", "1.0,-1.0", "--b", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("x/y"), "stderr: {msg}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let mut f = std::fs::File::create(&path).unwrap();
    write!(
        f,
        r#"{{
            "params": {{"a_plus": 1.0, "a_minus": 1.0}},
            "coupling": {{"b_re": 0.5}},
            "n": 1, "x": [0.5], "y": [2.0], "tolerance": 1e-8
        }}"#
    )
    .unwrap();
    let base = bin()
        .args(["eval", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(base.status.success());
    // flags win over the file: shift y so alpha*x*y = pi
    let over = bin()
        .args(["eval", "--config", path.to_str().unwrap(), "--y", "1.0"])
        .output()
        .unwrap();
    assert!(over.status.success());
    let v: serde_json::Value = serde_json::from_slice(&over.stdout).unwrap();
    assert!((v["value_re"].as_f64().unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn verify_unknown_suite_exits_1() {
    let out = bin().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_gamma_suite_passes_and_reports() {
    let out = bin()
        .args(["verify", "--suite", "gamma", "--seed", "7", "--aplus", "1", "--aminus", "0.8", "--b", "0.6"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["suite"], "gamma");
    assert_eq!(v[0]["seed"], 7);
    assert!(v[0]["pass"].as_bool().unwrap());
    assert!(!v[0]["checks"].as_array().unwrap().is_empty());
}

#[test]
fn verify_is_deterministic_for_a_seed() {
    let args = ["verify", "--suite", "kernels", "--seed", "3", "--b", "0.6"];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn scan_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("scan.csv");
    let out = bin()
        .args([
            "scan", "--n", "2", "--b", "0.9", "--t-min", "0.8", "--t-max", "2.6", "--t-steps",
            "7", "--tol", "1e-10", "--csv", csv_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["summary"]["pass"].as_bool().unwrap());
    assert!(v["summary"]["fitted_rate"].as_f64().unwrap() > v["summary"]["threshold"].as_f64().unwrap());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,d_N,abs_remainder,abs_E_as");
    assert_eq!(lines.count(), 7);
}
