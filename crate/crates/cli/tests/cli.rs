use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prowlnet"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn run_writes_json_csv_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("rec.json");
    let csv = dir.path().join("ticks.csv");
    let audit = dir.path().join("audit.jsonl");
    let out = run(&[
        "run",
        "--model",
        "jr",
        "--n",
        "80",
        "--policy",
        "bnde",
        "--r",
        "2",
        "--k",
        "4",
        "--seed",
        "5",
        "--epsilon",
        "0.01",
        "--epsilon",
        "0.1",
        "--out",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--audit-log",
        audit.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rec: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(rec["outcome"], "dominated");
    assert_eq!(rec["centralization"].as_array().unwrap().len(), 2);
    let ticks = std::fs::read_to_string(&csv).unwrap();
    assert!(ticks.starts_with("tick,nodes,edges,access_units"));
    let audit = std::fs::read_to_string(&audit).unwrap();
    assert!(audit
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
}

#[test]
fn run_is_deterministic() {
    let args = [
        "run", "--model", "sb", "--n", "90", "--policy", "xdeg", "--seed", "9",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn exit_codes() {
    let capped = run(&["run", "--model", "ba", "--n", "100", "--max-ticks", "2"]);
    assert_eq!(capped.status.code(), Some(3));
    let bad = run(&["run", "--model", "ba", "--avg-degree", "5"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = run(&["run", "--dataset", "/nonexistent/file.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = run(&["run", "--policy", "greedy"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn run_on_dataset() {
    let sample = data("tiny_edges.txt");
    let out = run(&[
        "run",
        "--dataset",
        sample.to_str().unwrap(),
        "--initial-stamp",
        "4",
        "--cadence",
        "2",
        "--r",
        "1",
        "--tail",
        "10",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["config"]["cadence"], 2);
    assert_eq!(rec["initial_edges"], 4);
}

#[test]
fn generate_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("ba.txt");
    let out = run(&[
        "generate",
        "--model",
        "ba",
        "--n",
        "50",
        "--seed",
        "2",
        "--ticks",
        "30",
        "--out",
        edges.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&edges).unwrap();
    // K_4 bootstrap, then three edges per arrival.
    assert_eq!(text.lines().count(), 6 + 3 * (50 - 4 + 30));
    let out = run(&[
        "run",
        "--dataset",
        edges.to_str().unwrap(),
        "--initial-stamp",
        "100",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn experiments_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let common = [
        "--model",
        "ba",
        "--n",
        "60",
        "--reps",
        "2",
        "--policy",
        "lran,bdeg",
    ];

    let mut args = vec!["exp1", "--out", d, "--r", "1,2", "--k", "4,7"];
    args.extend(common);
    let out = run(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(dir.path().join("exp1.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 2 * 2);

    let mut args = vec!["exp2", "--out", d, "--axis", "radius", "--r", "1,2"];
    args.extend(common);
    assert!(run(&args).status.success());
    assert!(dir.path().join("exp2_ba_radius.csv").exists());

    let mut args = vec!["exp3", "--out", d, "--threshold", "0.5"];
    args.extend(common);
    assert!(run(&args).status.success());
    let series = std::fs::read_to_string(dir.path().join("exp3_ba-n60-d6.csv")).unwrap();
    assert!(series.starts_with("tick,lran,bdeg\n"));
}

#[test]
fn example_plan_parses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let plan = data("plan.example.toml");
    let out = run(&[
        "exp1",
        "--config",
        plan.to_str().unwrap(),
        "--out",
        d,
        "--model",
        "rc",
        "--n",
        "60",
        "--reps",
        "1",
        "--policy",
        "bdeg",
        "--r",
        "2",
        "--k",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn verify_passes() {
    let out = run(&["verify", "--instances", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
