use std::process::{Command, Output};

use serde_json::Value;

fn hz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hzforms")).env_remove("HZFORMS_PRECISION").args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn envelope_shape() {
    let v = json(&hz(&["--k", "2", "--q", "3", "--r", "5", "--n", "6", "coeffs"]));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "coeffs");
    assert_eq!(v["precision_bits"], 256);
    assert!(v["metadata"]["version"].is_string());
}

#[test]
fn exit_codes() {
    // usage: missing --n, bad r, precision too low, n not strict
    assert_eq!(hz(&["--k", "2", "--q", "3", "--r", "5", "coeffs"]).status.code(), Some(2));
    assert_eq!(hz(&["--k", "2", "--q", "3", "--r", "4", "--n", "6", "coeffs"]).status.code(), Some(2));
    assert_eq!(hz(&["--k", "2", "--q", "3", "--r", "5", "--n", "6", "--precision-bits", "10", "coeffs"]).status.code(), Some(2));
    assert_eq!(hz(&["--k", "2", "--q", "3", "--r", "5", "--n", "7", "verify-all"]).status.code(), Some(2));
    assert_eq!(hz(&["--k", "2", "--q", "3", "--r", "5", "--n", "6", "--format", "csv", "saddle"]).status.code(), Some(2));
    assert_eq!(hz(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn relaxed_mode_accepts_even_n() {
    // 3! ∤ 4 but 4 is even and 2 | 4
    assert_eq!(hz(&["--k", "2", "--q", "3", "--r", "5", "--n", "4", "coeffs"]).status.code(), Some(2));
    assert!(hz(&["--k", "2", "--q", "3", "--r", "5", "--n", "4", "--relaxed", "coeffs"]).status.success());
}

#[test]
fn bound_scan_csv() {
    let out = hz(&["--k", "2", "--format", "csv", "bound", "scan", "--q-grid", "1e2,1e3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "q,r,d_lower,d_ratio,alpha_ratio,beta_ratio,alpha_hat_positive");
    assert!(lines[1].starts_with("100,21,"));
    assert!(lines[2].starts_with("1000,47,"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# base\nk = 2\nq = 3\nr = 5\nn = 6\nprecision-bits = 320\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&hz(&["--config", c, "coeffs"]));
    assert_eq!(v["precision_bits"], 320);
    let v = json(&hz(&["--config", c, "--precision-bits", "128", "coeffs"]));
    assert_eq!(v["precision_bits"], 128);

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(hz(&["--config", c, "coeffs"]).status.code(), Some(2));
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_hzforms"))
        .env("HZFORMS_PRECISION", "192")
        .args(["--k", "2", "--q", "3", "--r", "5", "--n", "6", "coeffs"])
        .output()
        .unwrap();
    assert_eq!(json(&out)["precision_bits"], 192);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = hz(&["--k", "3", "--q", "3", "--r", "7", "--n", "6", "--output", path.to_str().unwrap(), "linform"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "linform");
}
