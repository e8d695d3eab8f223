use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn recipro(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_recipro")).args(args).output().expect("binary runs");
    (out.status.code().expect("exited normally"), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(recipro(&[]).0, 1);
    assert_eq!(recipro(&["simulate"]).0, 1);
    assert_eq!(recipro(&["simulate", "--name", "nope"]).0, 1);
    assert_eq!(recipro(&["certify", "--scenario", "/definitely/missing.json"]).0, 1);
    assert_eq!(recipro(&["simulate", "--name", "example1", "--tol-conv", "0"]).0, 1);
    assert_eq!(recipro(&["--help"]).0, 0);
}

#[test]
fn certify_zero_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.json");
    std::fs::write(&zero, r#"{"n": 3, "pieces": [{"t0": 0, "t1": 10, "entries": []}]}"#).unwrap();
    let out = dir.path().join("out");
    let (code, err) = recipro(&["certify", "--scenario", zero.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report = json(out.join("certification.json"));
    assert_eq!(report["assumption1"]["K"], 1.0);
    assert_eq!(report["assumption2"]["M"], 0.0);
    assert_eq!(report["assumption3"]["violations"].as_array().unwrap().len(), 0);
    assert!(report["partition"]["times"].as_array().unwrap().len() >= 2);
}

#[test]
fn certify_one_way_schedule_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oneway.json");
    std::fs::write(&path, r#"{"n": 2, "pieces": [{"t0": 0, "t1": 10, "entries": [[0, 1, 1.0]]}]}"#).unwrap();
    let out = dir.path().join("out");
    let (code, err) = recipro(&["certify", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(json(out.join("certification.json"))["assumption1"]["K"].is_null());
}

#[test]
fn example1_writes_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let (code, err) =
        recipro(&["example", "--name", "example1", "--horizon", "2000", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report = json(out.join("cluster_report.json"));
    assert_eq!(report["components"], serde_json::json!([[0, 3], [1, 2]]));
    assert_eq!(report["path_reciprocal"], true);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,x1,x2,x3,x4");
    let samples = csv.lines().count() - 1;
    let plot = std::fs::read_to_string(out.join("plot.csv")).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "t,agent,component,value");
    assert_eq!(plot.lines().count() - 1, 4 * samples);
    // the saved schedule reloads and certifies
    let saved = out.join("schedule.json");
    let (code, err) = recipro(&["certify", "--scenario", saved.to_str().unwrap(), "--horizon", "40", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn oscillator_is_not_clustered() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = recipro(&["cluster", "--name", "oscillator", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    let report = json(dir.path().join("cluster_report.json"));
    assert_eq!(report["converged"][1], false);
}

#[test]
fn rendezvous_round_trips_its_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let (code, err) = recipro(&["rendezvous", "--name", "robots8", "--seed", "3", "--out", first.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report = json(first.join("rendezvous_report.json"));
    assert_eq!(report["rendezvous"]["pass"], true);
    assert!(report["rendezvous"]["final_diameter"].as_f64().unwrap() <= 9.0 + 2.0 * 0.025);
    let log = std::fs::read_to_string(first.join("interactions.jsonl")).unwrap();
    let event: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    for key in ["t", "i", "j", "b", "cause"] {
        assert!(event.get(key).is_some(), "missing {key}");
    }

    let second = dir.path().join("second");
    let scenario = first.join("scenario.json");
    let (code, err) = recipro(&["rendezvous", "--scenario", scenario.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let a = std::fs::read_to_string(first.join("trajectory.csv")).unwrap();
    let b = std::fs::read_to_string(second.join("trajectory.csv")).unwrap();
    assert!(a.starts_with("t,x1x,x1y,"));
    assert_eq!(a, b);
}
