use std::path::PathBuf;
use std::process::{Command, Output};

fn siegel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siegel")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("siegel-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn classify_prints_the_expansion() {
    let out = siegel(&["classify", "--theta", "golden", "--depth", "12", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["quotients"], serde_json::json!(vec![1; 12]));
    assert_eq!(v["convergents"][4], serde_json::json!([5, 8]));
}

#[test]
fn bad_rotation_numbers_are_preconditions() {
    assert_eq!(siegel(&["classify", "--theta", "abc"]).status.code(), Some(2));
    assert_eq!(siegel(&["classify", "--theta", "1/2"]).status.code(), Some(2));
    assert_eq!(siegel(&["classify", "--theta", "[1, 0, 2]"]).status.code(), Some(2));
    // Unknown flags are rejected by the parser with the same code.
    assert_eq!(siegel(&["classify", "--bogus"]).status.code(), Some(2));
}

#[test]
fn low_degree_model_is_a_stage_failure() {
    let dir = scratch("model");
    let out = siegel(&["model", "build", "--degree", "4", "--out", dir.join("m.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
    let out = siegel(&["pipeline", "--degree", "4", "--out", dir.join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.join("run/report.json").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unwritable_output_is_an_io_failure() {
    let dir = scratch("io");
    let file = dir.join("plain");
    std::fs::write(&file, b"x").unwrap();
    let target = file.join("image.ppm");
    let out = siegel(&["render", "--res", "16", "--iters", "50", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let out = siegel(&["--config", dir.join("missing.json").to_str().unwrap(), "classify"]);
    assert_eq!(out.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_file_is_validated() {
    let dir = scratch("config");
    let path = dir.join("cfg.json");
    std::fs::write(&path, br#"{"theta": "silver", "depth": 8}"#).unwrap();
    let out = siegel(&["--config", path.to_str().unwrap(), "classify", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["quotients"], serde_json::json!(vec![2; 8]));
    // Flags win over the file.
    let out = siegel(&["--config", path.to_str().unwrap(), "classify", "--theta", "golden", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["quotients"], serde_json::json!(vec![1; 8]));
    std::fs::write(&path, br#"{"colour": "red"}"#).unwrap();
    assert_eq!(siegel(&["--config", path.to_str().unwrap(), "classify"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn render_warns_on_rational_input() {
    let dir = scratch("render");
    let ppm = dir.join("third.ppm");
    let out = siegel(&["render", "--theta", "1/3", "--res", "32", "--iters", "100", "--json", "--out", ppm.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NonIrrational"));
    assert!(std::fs::read(&ppm).unwrap().starts_with(b"P6\n32 32\n255\n"));
    assert_eq!(siegel(&["render", "--res", "8", "--out", ppm.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn covering_demo_is_reproducible() {
    let run = || siegel(&["covering-demo", "--n", "8", "--k", "2", "--trials", "40", "--seed", "3", "--csv"]);
    let (a, b) = (run(), run());
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}
