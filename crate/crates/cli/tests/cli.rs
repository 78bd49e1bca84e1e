//! Exit codes and JSON output of the `tesh` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tesh"))
        .args(args)
        .env_remove("TESH_THREADS")
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn verify_exit_codes() {
    let ok = tesh(&["verify", &fixture("phi4")]);
    assert_eq!(ok.status.code(), Some(0));
    let report = json(&ok);
    assert_eq!(report["format"], "tesh-report-v1");
    assert_eq!(report["verdict"], true);
    assert_eq!(report["flags"]["tol"], 1e-9);
    assert_eq!(tesh(&["verify", &fixture("zero4")]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let truncated = dir.path().join("t.json");
    let text = std::fs::read_to_string(fixture("phi4")).unwrap();
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    let out = tesh(&["verify", truncated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));
    let missing = dir.path().join("missing.json");
    assert_eq!(tesh(&["verify", missing.to_str().unwrap()]).status.code(), Some(65));
    assert_eq!(tesh(&["verify", &fixture("phi4"), "--tol", "-1"]).status.code(), Some(64));
}

#[test]
fn search_writes_states_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("found");
    let args = ["search", "--n", "4", "--seeds", "20", "--output-dir", out_dir.to_str().unwrap()];
    let out = tesh(&args);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    assert!(summary["successes"].as_u64().unwrap() >= 1);
    assert_eq!(summary["flags"]["seeds"], 20);
    assert_eq!(summary["flags"]["master_seed"], 0);
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk["results"], summary["results"]);
    let first = summary["results"]
        .as_array()
        .unwrap()
        .iter()
        .find_map(|r| r["state_file"].as_str())
        .unwrap()
        .to_string();
    assert_eq!(tesh(&["verify", &first]).status.code(), Some(0));

    let again = tesh(&args);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn search_usage_and_negative_results() {
    assert_eq!(tesh(&["search", "--n", "4", "--seeds", "0"]).status.code(), Some(64));
    assert_eq!(tesh(&["search", "--n", "3"]).status.code(), Some(64));
    assert_eq!(tesh(&["search", "--n", "4", "--backtrack", "2"]).status.code(), Some(64));
    assert_eq!(tesh(&["search"]).status.code(), Some(64));
    let out = tesh(&["search", "--n", "8", "--seeds", "5", "--max-iters", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["successes"], 0);
}

#[test]
fn table_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bounds.json");
    let out = tesh(&["table", "--n", "4..6", "--format", "csv", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("n,m,lower_bound,upper_bound"));
    assert_eq!(lines.len(), 4);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["format"], "tesh-bounds-v1");
    assert_eq!(report["flags"]["sdp_level"], 2);
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["verdict"], "exists-known");
    }

    let md = tesh(&["table", "--n", "7"]);
    assert_eq!(md.status.code(), Some(0));
    let text = String::from_utf8(md.stdout).unwrap();
    assert!(text.contains("| 7* |") && text.contains("not implemented"));

    assert_eq!(tesh(&["table", "--n", "3..9"]).status.code(), Some(64));
    assert_eq!(tesh(&["table", "--n", "9..4"]).status.code(), Some(64));
    assert_eq!(tesh(&["table", "--sdp-level", "4"]).status.code(), Some(64));
}

#[test]
fn magic_outputs() {
    let out = tesh(&["magic", &fixture("phi4")]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((r["entropy"].as_f64().unwrap() - 1.17).abs() < 0.01);
    assert_eq!(r["stabilizers"].as_array().unwrap().len(), 3);
    assert_eq!(json(&tesh(&["magic", &fixture("zero4")]))["entropy"], 0.0);

    let haar = tesh(&["magic", "--haar", "4", "1000"]);
    assert_eq!(haar.status.code(), Some(0));
    let stats = json(&haar);
    assert!((stats["mean"].as_f64().unwrap() - 2.25).abs() < 0.05);
    assert_eq!(stats["flags"]["haar"], serde_json::json!([4, 1000]));

    assert_eq!(tesh(&["magic"]).status.code(), Some(64));
    assert_eq!(tesh(&["magic", &fixture("phi4"), "--alpha", "1"]).status.code(), Some(64));
    assert_eq!(tesh(&["magic", "--haar", "8", "10"]).status.code(), Some(64));
}

#[test]
fn thread_override_and_help() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_tesh"))
            .args(["search", "--n", "5", "--seeds", "4"])
            .env("TESH_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, two) = (run("1"), run("2"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(run("0").status.code(), Some(64));
    assert_eq!(tesh(&["--help"]).status.code(), Some(0));
    assert_eq!(tesh(&["--version"]).status.code(), Some(0));
    assert_eq!(tesh(&["frobnicate"]).status.code(), Some(64));
}
