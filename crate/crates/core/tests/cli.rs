use std::fs;
use std::process::Command;

use serde_json::Value;

const SMALL: &str = r#"{"name": "small", "height": 10, "rotation_step_deg": 90, "pieces": [
    {"vertices": [[0,0],[6,0],[6,4],[0,4]], "count": 2},
    {"vertices": [[0,0],[5,0],[0,5]]},
    {"vertices": [[0,0],[3,0],[3,3],[0,3]]}
]}"#;

fn opus() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opus"))
}

fn error_category(stderr: &[u8]) -> String {
    let line = String::from_utf8_lossy(stderr).lines().last().unwrap_or_default().to_string();
    let v: Value = serde_json::from_str(&line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"));
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn solve_writes_svg_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("small.json");
    fs::write(&inst, SMALL).unwrap();
    let svg = dir.path().join("out.svg");
    let rep = dir.path().join("out.json");
    let out = opus()
        .args(["solve", "--instance"])
        .arg(&inst)
        .args(["--tsp", "brute", "--delta-r", "1", "--theta-step", "15", "--grid", "20", "--out-svg"])
        .arg(&svg)
        .arg("--out-report")
        .arg(&rep)
        .env("OPUS_CACHE_DIR", dir.path().join("cache"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<path ").count(), 4);
    let r: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(r["pieces"], 4);
    let (ratio, pct) = (r["waste_ratio"].as_f64().unwrap(), r["waste_percent"].as_f64().unwrap());
    assert!((100.0 * ratio - pct).abs() < 1e-9);
    assert_eq!(r["config"]["discretization"]["r_step"], 1.0);
    assert!(fs::read_dir(dir.path().join("cache")).unwrap().count() > 0);

    // warm cache, same answer
    let rep2 = dir.path().join("again.json");
    let out = opus()
        .args(["solve", "--instance"])
        .arg(&inst)
        .args(["--tsp", "brute", "--delta-r", "1", "--theta-step", "15", "--grid", "20", "--out-report"])
        .arg(&rep2)
        .env("OPUS_CACHE_DIR", dir.path().join("cache"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let r2: Value = serde_json::from_str(&fs::read_to_string(&rep2).unwrap()).unwrap();
    assert_eq!(r["length"], r2["length"]);
}

#[test]
fn malformed_instance_is_an_instance_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("bad.json");
    fs::write(&inst, r#"{"name": "bad", "height": 10, "pieces": [{"vertices": [[0,0],[1,0]]}]}"#).unwrap();
    let out = opus().args(["solve", "--instance"]).arg(&inst).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(error_category(&out.stderr), "instance");

    let out = opus().args(["solve", "--instance"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(error_category(&out.stderr), "io");
}

#[test]
fn too_tall_piece_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("tall.json");
    fs::write(&inst, r#"{"name": "tall", "height": 2, "pieces": [{"vertices": [[0,0],[3,0],[3,3],[0,3]]}]}"#).unwrap();
    let out = opus().args(["solve", "--instance"]).arg(&inst).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(error_category(&out.stderr), "infeasible");
}

#[test]
fn nff_dumps_one_table() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("small.json");
    fs::write(&inst, SMALL).unwrap();
    let out = opus()
        .args(["nff", "--instance"])
        .arg(&inst)
        .args(["--pair", "0,2", "--theta-step", "30", "--delta-r", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["table"]["entries"].as_array().unwrap().len(), 12);
    assert_eq!(v["pair"], serde_json::json!([0, 2]));
}

#[test]
fn tune_qaoa_small_run() {
    let out = opus()
        .args(["tune-qaoa", "--instances", "2", "--nodes", "3", "--reps-max", "2", "--shots", "200", "--max-evals", "40"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}
