use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypersteiner")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = cli(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn ratio(v: &Value) -> (i64, i64) {
    (v["num"].as_str().unwrap().parse().unwrap(), v["den"].as_str().unwrap().parse().unwrap())
}

#[test]
fn lp_reports_objective_and_support() {
    let star = data("star.stp");
    let v = json(&["lp", star.to_str().unwrap(), "--json"]);
    assert_eq!(ratio(&v["objective"]), (3, 1));
    assert_eq!(v["N"], "1");
    assert_eq!(v["support"].as_array().unwrap().len(), 1);
    let full = json(&["lp", star.to_str().unwrap(), "--mode", "full", "--json"]);
    assert_eq!(full["objective"], v["objective"]);
}

#[test]
fn quasi_run_is_within_73_over_60() {
    let star = data("star.stp");
    let v = json(&["run", star.to_str().unwrap(), "--strategy", "quasi", "--check", "--json"]);
    let (n, d) = ratio(&v["ratio"]);
    assert!(60 * n <= 73 * d);
    assert_eq!(v["tree_within_bound"], true);
    assert_eq!(v["certificate"]["strategy"], "quasi");
}

#[test]
fn quasi_strategy_rejects_general_graphs() {
    let path = data("general.stp");
    let out = cli(&["run", path.to_str().unwrap(), "--strategy", "quasi"]);
    assert_eq!(out.status.code(), Some(2));
    let ok = cli(&["run", path.to_str().unwrap(), "--strategy", "dp"]);
    assert!(ok.status.success());
}

#[test]
fn output_is_deterministic() {
    let star = data("general.stp");
    let args = ["run", star.to_str().unwrap(), "--strategy", "random", "--seed", "7", "--json"];
    assert_eq!(cli(&args).stdout, cli(&args).stdout);
    let bench = ["bench", "--seed", "0..5", "--json", "--no-time"];
    assert_eq!(cli(&bench).stdout, cli(&bench).stdout);
}

#[test]
fn bcr_decomposition_matches_lp() {
    let star = data("star.stp");
    let lp = json(&["lp", star.to_str().unwrap(), "--json"]);
    let v = json(&["bcr", star.to_str().unwrap(), "--decompose", "--check", "--json"]);
    assert_eq!(v["objective"], lp["objective"]);
    assert_eq!(v["decomposition"]["objective"], lp["objective"]);
}

#[test]
fn split_reports_exact_ratio() {
    let star = data("star.stp");
    let v = json(&["split", star.to_str().unwrap(), "--strategy", "quasi", "--json"]);
    assert_eq!(ratio(&v["potential"]), (7, 2));
    assert_eq!(ratio(&v["ratio"]), (7, 6));
}

#[test]
fn separate_finds_feasible_and_infeasible_states() {
    let star = data("star.stp");
    let out = cli(&["separate", star.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "feasible");
    let v = json(&["separate", star.to_str().unwrap(), "--remove", "0", "--json"]);
    assert_eq!(v["feasible"], false);
}

#[test]
fn decompose_table() {
    let table = data("table.json");
    let v = json(&["decompose", "--table", table.to_str().unwrap(), "--json"]);
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 1);
    assert_eq!(ratio(&terms[0]["lambda"]), (1, 1));
    assert_eq!(terms[0]["partition"], serde_json::json!([[0], [1], [2]]));
}

#[test]
fn verify_matroid_suite_passes() {
    let out = cli(&["verify", "matroid", "--seed", "1..100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 failures"));
}

#[test]
fn verify_all_suites_pass() {
    assert!(cli(&["verify", "all", "--seed", "0..10"]).status.success());
}

#[test]
fn bench_emits_csv_table() {
    let out = cli(&["bench", "--seed", "0..3", "--terminals", "4", "--steiner", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance,lp,tree,ratio,bound,iterations,wall_time_ms"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cli(&["run", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["lp", "/nonexistent.stp"]).status.code(), Some(2));
    assert_eq!(cli(&["verify", "matroid", "--seed", "5..2"]).status.code(), Some(2));
}
