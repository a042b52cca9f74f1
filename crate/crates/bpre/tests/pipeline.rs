//! End-to-end checks of the compiled binary: artifact schema, exit
//! codes, determinism across worker counts, and record replay.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bpre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpre"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&read(dir, name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn simulate_writes_complete_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let result = bpre(&[
        "simulate",
        "--replicates",
        "120",
        "--seed",
        "3",
        "--generations",
        "12",
        "--out",
        out,
    ]);
    assert!(result.status.success(), "{result:?}");

    let record = json(dir.path(), "run_record.json");
    assert_eq!(record["command"], "simulate");
    assert_eq!(record["complete"], true);
    assert_eq!(record["seed"], 3);
    assert_eq!(record["config"]["seed"], "3");
    assert_eq!(record["config"]["replicates"], "120");
    assert!(record["rng"]["offspring_draws"].as_u64().unwrap() > 0);
    assert_eq!(record["environments"].as_array().unwrap().len(), 8);

    let csv = String::from_utf8(read(dir.path(), "samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "replicate,n,mode,count,ln_z,t");
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,0,exact,1,"), "{first}");

    let report = json(dir.path(), "report.json");
    assert_eq!(report["command"], "simulate");
    assert_eq!(report["results"]["replicates"], 120);

    let timing = json(dir.path(), "timing.json");
    assert!(timing["wall_ms"].is_number());
}

#[test]
fn unknown_config_key_is_rejected_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "seed = 5\nclassify.depth = 10\n").unwrap();
    let result = bpre(&["classify", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("classify.depth"), "{stderr}");
}

#[test]
fn alpha_range_touching_one_is_rejected() {
    let result = bpre(&[
        "simulate",
        "--model",
        "sibuya",
        "--alpha-min",
        "0.2",
        "--alpha-max",
        "1.0",
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("< 1"), "{stderr}");
}

#[test]
fn worker_count_never_changes_artifact_bytes() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&dir1, "1"), (&dir2, "3")] {
        let result = bpre(&[
            "limits",
            "--replicates",
            "150",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{result:?}");
    }
    for name in ["run_record.json", "samples.csv", "report.json"] {
        assert_eq!(
            read(dir1.path(), name),
            read(dir2.path(), name),
            "{name} differs between worker counts"
        );
    }
}

#[test]
fn classify_sees_the_heavy_tailed_model_as_fully_regular() {
    let dir = tempfile::tempdir().unwrap();
    let result = bpre(&[
        "classify",
        "--replicates",
        "20",
        "--seed",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let report = json(dir.path(), "report.json");
    let results = &report["results"];
    assert_eq!(results["fraction_regular"], 1.0);
    assert_eq!(results["process_regular"], 20);
    assert_eq!(results["point_irregular"], 0);
    assert_eq!(results["sufficient"]["holds"], true);

    let csv = String::from_utf8(read(dir.path(), "samples.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|line| line.contains(",regular,")));
}

#[test]
fn limits_csv_has_one_row_per_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let result = bpre(&[
        "limits",
        "--replicates",
        "150",
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let csv = String::from_utf8(read(dir.path(), "samples.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "replicate,final_n,mode,y,t,normalized");
    assert_eq!(lines.len(), 151);
    let report = json(dir.path(), "report.json");
    assert!(report["results"]["y"]["ks_uniform"]["statistic"].is_number());
    assert!(report["results"]["functional_equation"]["max_residual"].is_number());
}

#[test]
fn replay_regenerates_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let result = bpre(&[
        "limits",
        "--replicates",
        "120",
        "--seed",
        "13",
        "--out",
        out,
    ]);
    assert!(result.status.success(), "{result:?}");
    let before: Vec<Vec<u8>> = ["run_record.json", "samples.csv", "report.json"]
        .iter()
        .map(|name| read(dir.path(), name))
        .collect();

    let result = bpre(&["report", "--out", out]);
    assert!(result.status.success(), "{result:?}");
    let after: Vec<Vec<u8>> = ["run_record.json", "samples.csv", "report.json"]
        .iter()
        .map(|name| read(dir.path(), name))
        .collect();
    assert_eq!(before, after, "replay must reproduce artifacts exactly");
}

#[test]
fn report_without_a_record_fails_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();
    let result = bpre(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn replay_recovers_an_interrupted_run() {
    // The preliminary record is written before any simulation work, so
    // a crash mid-run leaves `complete: false` behind. Reproduce that
    // state and confirm `report` regenerates the run from it.
    let dir = tempfile::tempdir().unwrap();
    let record = serde_json::json!({
        "command": "simulate",
        "complete": false,
        "seed": 17,
        "config": {"seed": "17", "replicates": "110", "generations": "8"},
        "environments_total": 110,
        "environments": [],
        "rng": {"offspring_draws": 0, "stable_draws": 0}
    });
    fs::write(
        dir.path().join("run_record.json"),
        serde_json::to_vec(&record).unwrap(),
    )
    .unwrap();

    let result = bpre(&["report", "--out", dir.path().to_str().unwrap()]);
    assert!(result.status.success(), "{result:?}");
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("incomplete"), "{stdout}");

    let repaired = json(dir.path(), "run_record.json");
    assert_eq!(repaired["complete"], true);
    assert_eq!(repaired["seed"], 17);
    assert!(dir.path().join("samples.csv").exists());
    assert!(dir.path().join("report.json").exists());
}
