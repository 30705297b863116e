use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use opetopic::fixtures::three_type;
use opetopic::web::three_type_pairs;
use opetopic::MonoidSig;
use serde_json::{json, Value};

fn opetopic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opetopic"))
        .args(args)
        .env_remove("OPETOPIC_CAP")
        .env_remove("OPETOPIC_NODE_BOUND")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("opetopic-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn shipped_monoid_file_matches_the_fixture() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_type.json");
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let m = MonoidSig::from_json(&v).unwrap();
    assert_eq!(m.to_json(), three_type().to_json());
    assert_eq!(m.to_json(), v);
}

#[test]
fn web_mul_reproduces_the_first_composition() {
    let dir = scratch("web-mul");
    let (w, vs) = &three_type_pairs()[0];
    let input = dir.join("pair.json");
    fs::write(&input, json!({ "outer": w, "inners": vs }).to_string()).unwrap();
    let out = opetopic(&["web-mul", input.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["amalgamation"], json!([1, 2, 4, 3]));
    assert_eq!(v["node"], json!("c"));

    let dot = opetopic(&["web-mul", input.to_str().unwrap(), "--format", "dot"]);
    let text = String::from_utf8(dot.stdout).unwrap();
    assert!(text.starts_with("digraph \"nu\""));
    assert_eq!(text.matches("shape=box").count(), 4);
}

#[test]
fn compare_reads_a_monoid_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_type.json");
    let out = opetopic(&[
        "compare", "--monoid", path, "--x-size", "2", "--stages", "2",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["passed"], json!(true));
    assert_eq!(v["stages"].as_array().unwrap().len(), 3);
}

#[test]
fn counterexample_prints_a_certificate() {
    let out = opetopic(&["counterexample"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(
        v["certificate"],
        json!([[["b", "t"]], [["b", "s"]], [["b", "c"]]])
    );
    assert_eq!(v["instances"].as_array().unwrap().len(), 3);
}

#[test]
fn opetopes_as_dot_files() {
    let dir = scratch("dot");
    let out = opetopic(&[
        "opetopes",
        "--dim",
        "3",
        "--max-nodes",
        "2",
        "--format",
        "dot",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json = stdout_json(&opetopic(&["opetopes", "--dim", "3", "--max-nodes", "2"]));
    let count = |n: usize| json["dimensions"][n]["count"].as_u64().unwrap() as usize;
    assert_eq!(count(2), 3);
    assert_eq!(fs::read_dir(&dir).unwrap().count(), count(2) + count(3));
}

#[test]
fn errors_are_reported_as_json() {
    let missing = opetopic(&["compare", "--monoid", "/nonexistent/monoid.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert!(err["error"]
        .as_str()
        .unwrap()
        .contains("/nonexistent/monoid.json"));

    let zero = opetopic(&["opetopes", "--dim", "0"]);
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn laws_report_is_json_with_every_suite() {
    let out = opetopic(&["laws", "--seed", "3", "--cases", "3", "--node-bound", "3"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["result"]["passed"], json!(true));
    let suites: Vec<&str> = v["result"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["suite"].as_str().unwrap())
        .collect();
    assert_eq!(suites.len(), 7, "{suites:?}");
}
