//! End-to-end checks of the command-line binary: output shape and exit
//! codes.

use std::process::Command;

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_faultdiag")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn diagnose_reports_the_minimal_diagnosis_as_json() {
    let (code, stdout, _) = run(&[
        "diagnose",
        &fixture("half_adder.sdl"),
        "--inputs",
        "a=1,b=1",
        "--obs",
        "s=0,c=0",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v, serde_json::json!({ "cardinality": 1, "diagnoses": [["n5"]] }));
}

#[test]
fn modules_lists_the_partition() {
    let (code, stdout, _) = run(&["modules", &fixture("adder3.sdl")]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["modules"].as_array().unwrap().len(), 3);
    assert_eq!(v["quotient_edges"], serde_json::json!([[0, 1], [1, 2]]));
}

#[test]
fn place_emits_a_certified_schedule() {
    let (code, stdout, _) = run(&[
        "place",
        &fixture("eps_small.sdl"),
        "--m-max",
        "3",
        "--k-max",
        "10",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["certified"], serde_json::json!(true));
    assert_eq!(v["sensors"], serde_json::json!(["B2", "B5"]));
    assert!(v["configurations"].as_array().unwrap().len() <= 10);
}

#[test]
fn unsatisfiable_placement_exits_with_code_1() {
    let (code, _, stderr) =
        run(&["place", &fixture("full_adder.sdl"), "--m-max", "1", "--k-max", "10"]);
    assert_eq!(code, 1, "stderr: {stderr}");
}

#[test]
fn a_missing_input_file_exits_with_code_2() {
    let (code, _, stderr) = run(&["diagnose", "/nonexistent/system.sdl"]);
    assert_eq!(code, 2, "stderr: {stderr}");
}
