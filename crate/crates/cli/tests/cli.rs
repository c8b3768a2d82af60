use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/fig1.json")
}

fn mptsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mptsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn solvers_on_the_fixture() {
    let f = fixture();
    let f = f.to_str().unwrap();

    let derand = json(&mptsp(&["solve-multipath", "--input", f, "--derandomize"]));
    assert!(derand["cost"].as_u64().unwrap() <= 16);
    assert_eq!(derand["report"]["lp_objective"].as_f64(), Some(8.0));

    let rand = json(&mptsp(&["solve-multipath", "--input", f, "--seed", "3", "--trials", "10"]));
    assert!(rand["cost"].as_u64().unwrap() <= 16);

    let combined = json(&mptsp(&["solve-combined", "--input", f]));
    assert!(combined["cost"].as_u64() <= derand["cost"].as_u64());
    assert!(combined["winner"].is_string());

    let exact = json(&mptsp(&["exact", "--input", f]));
    assert_eq!(exact["cost"].as_u64(), Some(8));

    let lp = json(&mptsp(&["lp", "--input", f]));
    assert!((lp["objective"].as_f64().unwrap() - 8.0).abs() < 1e-6);

    let dec = json(&mptsp(&["decompose", "--input", f]));
    assert_eq!(dec["commodities"].as_array().unwrap().len(), 2);
    assert!(dec["reconstruction_error"].as_f64().unwrap() < 1e-6);

    let join = json(&mptsp(&["tjoin", "--input", f, "--targets", "0,2"]));
    assert_eq!(join["cost"].as_u64(), Some(3));
}

#[test]
fn generated_instances_feed_the_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let ordered = dir.path().join("ordered.json");
    let vrp = dir.path().join("vrp.json");
    let ok = |args: &[&str]| assert!(mptsp(args).status.success(), "{args:?}");
    ok(&["gen", "--family", "ordered", "--k-min", "3", "--k-max", "3", "--seed", "4", "--output", ordered.to_str().unwrap()]);
    ok(&["gen", "--family", "vrp", "--seed", "4", "--output", vrp.to_str().unwrap()]);

    let run = json(&mptsp(&["solve-ordered", "--input", ordered.to_str().unwrap(), "--trials", "5"]));
    assert_eq!(run["walks"].as_array().unwrap().len(), 3);

    let forest = json(&mptsp(&["solve-vrp", "--input", vrp.to_str().unwrap()]));
    let inst: Value = serde_json::from_str(&fs::read_to_string(&vrp).unwrap()).unwrap();
    let n = inst["n"].as_u64().unwrap();
    let k = inst["commodities"].as_array().unwrap().len() as u64;
    assert_eq!(forest["cost"].as_u64(), Some(2 * (n - k)));
}

#[test]
fn export_dot_and_lp_dump() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture();
    let sol = dir.path().join("sol.json");
    let dot = dir.path().join("fig.dot");
    let lp = dir.path().join("model.lp");
    let exact = mptsp(&["exact", "--input", f.to_str().unwrap(), "--output", sol.to_str().unwrap()]);
    assert!(exact.status.success());
    let out = mptsp(&[
        "export-dot",
        "--input",
        f.to_str().unwrap(),
        "--solution",
        sol.to_str().unwrap(),
        "--output",
        dot.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("graph mptsp {"));
    assert_eq!(text.matches("penwidth=2.5").count(), 8);

    assert!(mptsp(&["lp", "--input", f.to_str().unwrap(), "--dump-lp", lp.to_str().unwrap()]).status.success());
    let model = fs::read_to_string(&lp).unwrap();
    assert!(model.contains("Minimize") && model.contains("cover_"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture();
    let f = f.to_str().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n": 3, "edges": [[0, 1]], "commodities": [[0, 1]]}"#).unwrap();

    assert_eq!(mptsp(&["lp", "--input", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(mptsp(&["lp", "--input", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(mptsp(&["solve-vrp", "--input", f]).status.code(), Some(2));
    assert_eq!(mptsp(&["solve-ordered", "--input", f]).status.code(), Some(2));
    assert_eq!(mptsp(&["tjoin", "--input", f, "--targets", "0"]).status.code(), Some(2));
    assert_eq!(mptsp(&["no-such-command"]).status.code(), Some(2));

    // A solution that skips a vertex is rejected as input.
    let sol = dir.path().join("sol.json");
    fs::write(&sol, r#"{"walks": [[0, 4, 6, 2], [1, 9, 2, 7, 4, 3]], "cost": 8}"#).unwrap();
    let out = mptsp(&["export-dot", "--input", f, "--solution", sol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_json_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let table = dir.path().join("table.txt");
    let out = mptsp(&[
        "bench",
        "--include-fixture",
        "--instances",
        "5",
        "--trials",
        "4",
        "--output",
        report.to_str().unwrap(),
        "--table",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(value["schema"], 1);
    assert_eq!(value["rows"].as_array().unwrap().len(), 6);
    assert_eq!(value["rows"][0]["name"], "fig1");
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.lines().next().unwrap().starts_with("name"));
    assert!(text.contains("failed rows: 0"));
}
