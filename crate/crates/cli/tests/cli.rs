use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: Value,
}

fn nba(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_nba")).args(args).output().expect("binary runs");
    let text = String::from_utf8(out.stdout).unwrap();
    let stdout = serde_json::from_str(&text).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"));
    Run {
        code: out.status.code().unwrap(),
        stdout,
    }
}

fn put(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, value.to_string()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn triangle() -> Value {
    let edges = json!([[1, 2], [1, 3], [2, 1], [2, 3], [3, 1], [3, 2]]);
    json!({
        "schema": "nba-instance/1",
        "network": {"n": 3, "prices": [1, 1, 1], "egress_caps": [10, 10, 10], "ingress_caps": [10, 10, 10], "edges": edges},
        "billing": {"p": 1, "q": "19/20"},
        "demands": [{"t": 1, "edges": edges, "sources": [{"s": 1, "w": 1, "dests": [2, 3]}]}]
    })
}

fn pair(w: u64) -> Value {
    json!({
        "schema": "nba-instance/1",
        "network": {"n": 2, "prices": [1, 1], "egress_caps": [10, 10], "ingress_caps": [10, 10], "edges": [[1, 2]]},
        "billing": {"p": 1},
        "demands": [{"t": 1, "edges": [[1, 2]], "sources": [{"s": 1, "w": w, "dests": [2]}]}]
    })
}

fn plan(edges: Value) -> Value {
    json!({"schema": "nba-plan/1", "slots": [{"t": 1, "sources": [{"s": 1, "edges": edges}]}]})
}

fn cwan(pops: usize, clients: usize) -> Value {
    let edges: Vec<[usize; 2]> = (1..=pops).flat_map(|i| (1..=clients).map(move |c| [i, pops + c])).collect();
    json!({
        "schema": "nba-cwan/1",
        "pops": pops,
        "clients": clients,
        "prices": vec![1; pops],
        "caps": vec![10; pops],
        "billing": {"p": 1},
        "slots": [{"t": 1, "edges": edges, "demands": vec![3; clients]}]
    })
}

#[test]
fn cost_of_the_chain() {
    let dir = TempDir::new().unwrap();
    let inst = put(&dir, "i.json", &triangle());
    let p = put(&dir, "p.json", &plan(json!([[1, 2], [2, 3]])));
    let run = nba(&["cost", "--instance", s(&inst), "--plan", s(&p)]);
    assert_eq!(run.code, 0);
    assert_eq!(run.stdout, json!({"cost": 3}));
}

#[test]
fn overloaded_plan_fails_validation() {
    let dir = TempDir::new().unwrap();
    let inst = put(&dir, "i.json", &pair(12));
    let p = put(&dir, "p.json", &plan(json!([[1, 2]])));
    let run = nba(&["validate", "--instance", s(&inst), "--plan", s(&p)]);
    assert_eq!(run.code, 1);
    assert_eq!(run.stdout["feasible"], json!(false));
    let kinds: Vec<&str> = run.stdout["violations"].as_array().unwrap().iter().map(|v| v["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["egress_cap_exceeded", "ingress_cap_exceeded"]);
    assert_eq!(nba(&["solve", "--instance", s(&inst)]).code, 1);
}

#[test]
fn solved_plans_revalidate_and_recost() {
    let dir = TempDir::new().unwrap();
    let spec = put(&dir, "spec.json", &json!({"seed": 5, "n": 4, "p": 2}));
    let inst = dir.path().join("i.json");
    assert_eq!(nba(&["gen", "--spec", s(&spec), "--out", s(&inst)]).code, 0);
    for strategy in ["exact", "greedy", "local"] {
        let out = dir.path().join(format!("{strategy}.json"));
        let report = dir.path().join(format!("{strategy}-report.json"));
        let run = nba(&["solve", "--instance", s(&inst), "--strategy", strategy, "--seed", "3", "--out", s(&out), "--report", s(&report)]);
        assert_eq!(run.code, 0, "{strategy}");
        assert_eq!(nba(&["validate", "--instance", s(&inst), "--plan", s(&out)]).code, 0);
        let cost = nba(&["cost", "--instance", s(&inst), "--plan", s(&out)]);
        assert_eq!(cost.stdout["cost"], run.stdout["cost"]);
        let saved: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(saved["cost"], run.stdout["cost"]);
    }
}

#[test]
fn generation_and_single_worker_solves_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let spec = put(&dir, "spec.json", &json!({"seed": 11, "n": 4, "p": 2, "scenario": "generic"}));
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    nba(&["gen", "--spec", s(&spec), "--out", s(&a)]);
    nba(&["gen", "--spec", s(&spec), "--out", s(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (pa, pb) = (dir.path().join("pa.json"), dir.path().join("pb.json"));
    nba(&["--workers", "1", "solve", "--instance", s(&a), "--out", s(&pa)]);
    nba(&["--workers", "1", "solve", "--instance", s(&a), "--out", s(&pb)]);
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
}

#[test]
fn malformed_input_names_the_field() {
    let dir = TempDir::new().unwrap();
    let mut bad = triangle();
    bad["network"]["prices"][1] = json!("cheap");
    let inst = put(&dir, "i.json", &bad);
    let run = nba(&["validate", "--instance", s(&inst)]);
    assert_eq!(run.code, 2);
    assert_eq!(run.stdout["error"], json!("input"));
    assert!(run.stdout["message"].as_str().unwrap().contains("network.prices[1]"), "{}", run.stdout);
    assert_eq!(nba(&["validate", "--bogus"]).code, 2);
    assert_eq!(nba(&["cost", "--instance", "/nonexistent.json", "--plan", "/nonexistent.json"]).code, 2);
}

#[test]
fn milp_exports() {
    let dir = TempDir::new().unwrap();
    let inst = put(&dir, "i.json", &triangle());
    for (format, head) in [("lp", "\\ nba milp"), ("mps", "* nba milp")] {
        let out = dir.path().join(format!("m.{format}"));
        let run = nba(&["export-milp", "--instance", s(&inst), "--format", format, "--out", s(&out)]);
        assert_eq!(run.code, 0);
        assert_eq!(run.stdout["constraints"], json!(17));
        assert!(std::fs::read_to_string(&out).unwrap().starts_with(head));
    }
}

#[test]
fn unimodularity_checks() {
    let dir = TempDir::new().unwrap();
    let small = put(&dir, "cw.json", &cwan(2, 2));
    let run = nba(&["check-tu", "--instance", s(&small), "--slot", "1", "--max-sub", "4"]);
    assert_eq!(run.code, 0);
    assert_eq!(run.stdout["unimodular"], json!(true));
    assert_eq!(nba(&["check-tu", "--instance", s(&small), "--slot", "2"]).code, 2);
    let big = put(&dir, "big.json", &cwan(8, 8));
    let run = nba(&["check-tu", "--instance", s(&big), "--slot", "1", "--max-sub", "8"]);
    assert_eq!(run.code, 3);
    assert_eq!(run.stdout["error"], json!("resource"));
}

#[test]
fn cloud_wan_solve() {
    let dir = TempDir::new().unwrap();
    let inst = put(&dir, "cw.json", &cwan(2, 2));
    let run = nba(&["solve", "--instance", s(&inst)]);
    assert_eq!(run.code, 0);
    assert_eq!(run.stdout["cost"], json!(6));
    assert_eq!(nba(&["solve", "--instance", s(&inst), "--strategy", "local"]).code, 2);
}
