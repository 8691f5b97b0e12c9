use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

const M2_Q05: &str = r#"{"A": [[[0,0],[1.4142135623730951,0]],[[-0.7071067811865476,0],[0,0]]], "N": 6}"#;
const M2_Q1: &str = r#"{"A": [[[0,0],[1,0]],[[-1,0],[0,0]]], "N": 6}"#;
const M3_STANDARD: &str =
    r#"{"A": [[[0,0],[0,0],[1,0]],[[0,0],[0,1],[0,0]],[[-1,0],[0,0],[0,0]]], "N": 3}"#;

fn write_config(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &str, args: &[&str]) -> (i32, Value) {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, config);
    let out = Command::new(env!("CARGO_BIN_EXE_tlfock"))
        .arg(args[0])
        .arg("-c")
        .arg(&path)
        .args(&args[1..])
        .output()
        .unwrap();
    let report = serde_json::from_slice(&out.stdout).expect("stdout is always a JSON document");
    (out.status.code().unwrap(), report)
}

#[test]
fn malformed_json_is_an_input_error() {
    let (code, report) = run("{\"A\": ", &["report"]);
    assert_eq!(code, 2);
    let msg = report["error"].as_str().unwrap();
    assert!(msg.contains("line"), "parse errors carry a position: {msg}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let (code, report) = run(r#"{"A": [[[0,0],[1,0]],[[-1,0],[0,0]]], "extra": 1}"#, &["report"]);
    assert_eq!(code, 2);
    assert!(report["error"].as_str().unwrap().contains("extra"));
}

#[test]
fn one_generator_matrix_is_a_shape_error() {
    let (code, _) = run(r#"{"A": [[[1,0]]]}"#, &["report"]);
    assert_eq!(code, 2);
}

#[test]
fn non_temperley_lieb_matrix_fails_validation() {
    let (code, report) = run(r#"{"A": [[[1,0],[0,0]],[[0,0],[2,0]]], "N": 3}"#, &["report"]);
    assert_eq!(code, 2);
    let entry = &report["suites"][0];
    assert_eq!(entry["suite"], "validate");
    assert_eq!(entry["status"], "error");
}

#[test]
fn explicit_index_on_three_generators_is_an_error() {
    let (code, report) = run(M3_STANDARD, &["index"]);
    assert_eq!(code, 2);
    let entry = &report["suites"][0];
    assert_eq!(entry["suite"], "index");
    assert_eq!(entry["status"], "error");
}

#[test]
fn defaulted_fredholm_is_skipped_on_undeformed_systems() {
    let (code, report) = run(M2_Q1, &["report"]);
    assert_eq!(code, 0);
    let fredholm = report["suites"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["suite"] == "fredholm")
        .unwrap();
    assert_eq!(fredholm["status"], "skipped");
    assert_eq!(report["overall"], "pass");
}

#[test]
fn explicit_fredholm_on_undeformed_systems_is_an_error() {
    let (code, report) = run(M2_Q1, &["fredholm"]);
    assert_eq!(code, 2);
    assert_eq!(report["suites"][0]["status"], "error");
}

#[test]
fn kgroups_honors_the_family_override() {
    let (code, report) = run(M2_Q05, &["kgroups", "-m", "6"]);
    assert_eq!(code, 0);
    let detail = &report["suites"][0]["detail"];
    assert_eq!(detail["algebra"]["k0_description"], "Z/4Z");
}

#[test]
fn family_override_without_kgroups_is_rejected() {
    let (code, report) = run(M2_Q05, &["dims", "-m", "4"]);
    assert_eq!(code, 2);
    assert!(report["error"].as_str().unwrap().contains("kgroups"));
}

#[test]
fn unknown_commands_are_rejected() {
    let (code, report) = run(M2_Q05, &["bogus"]);
    assert_eq!(code, 2);
    assert!(report["error"].as_str().unwrap().contains("bogus"));
}

#[test]
fn csv_and_json_outputs_land_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(&dir, M2_Q05);
    let csv_path = dir.path().join("decay.csv");
    let json_path = dir.path().join("report.json");
    let out = Command::new(env!("CARGO_BIN_EXE_tlfock"))
        .args(["commutators", "-c"])
        .arg(&config)
        .arg("--csv")
        .arg(&csv_path)
        .arg("--json")
        .arg(&json_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().next(), Some("n,value,q_power,ratio"));
    assert_eq!(csv.lines().count(), 6, "header plus one row per level");

    let on_disk: Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let on_stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(on_disk, on_stdout);
}
