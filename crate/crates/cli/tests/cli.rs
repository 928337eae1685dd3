use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn imitation(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imitation")).args(args).env_remove("IMITATION_SEED").output().unwrap()
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn list_shows_every_scenario() {
    let o = imitation(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 15);
    assert!(text.contains("tree-structure-paper-table"));
}

#[test]
fn run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = imitation(&["run", config("tree-structure-paper-table").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS order-matches"));
    assert!(out.join("estimates.csv").exists());
    let r = imitation(&["replay", out.join("report.json").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(stdout(&r).contains("replay identical"));
}

#[test]
fn traces_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = imitation(&["run", config("assisted-oracle-convergence").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("mse_trace.csv")).unwrap();
    assert!(csv.starts_with("round,mse\n"));
}

#[test]
fn seed_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = config("trivial-imitation");
    let o = Command::new(env!("CARGO_BIN_EXE_imitation"))
        .args(["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("IMITATION_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(report(dir.path())["config"]["seed"], 99);
    let o = Command::new(env!("CARGO_BIN_EXE_imitation"))
        .args(["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--seed", "5"])
        .env("IMITATION_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(report(dir.path())["config"]["seed"], 5);
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(config("boundary-extraction")).unwrap()).unwrap();
    cfg["params"] = serde_json::json!({ "max_angle": -1.0 });
    let path = dir.path().join("strict.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = imitation(&["run", path.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL direction-angle"));
    assert_eq!(report(&dir.path().join("out"))["passed"], false);
}

#[test]
fn bad_config_exits_two_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"experiment_id": "x", "scenario": "trivial-imitation", "seed": 1, "dataset": {"n": 10, "p_b": 2, "nn": 3}, "monte_carlo": {"n_tasks": 1, "n_test": 1}}"#).unwrap();
    let o = imitation(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dataset.nn"));
}

#[test]
fn edited_report_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = imitation(&["run", config("trivial-imitation").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let mut r = report(dir.path());
    r["config"]["seed"] = serde_json::json!(12345);
    std::fs::write(dir.path().join("report.json"), r.to_string()).unwrap();
    let o = imitation(&["replay", dir.path().join("report.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash mismatch"));
}

#[test]
fn unknown_scenario_config_is_an_error() {
    assert_eq!(imitation(&["config", "nope"]).status.code(), Some(2));
}
