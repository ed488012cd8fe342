//! The command-line front end, driven as a subprocess.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbv-bench")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.json");
    let cfg = serde_json::json!({
        "plant_seeds": [1],
        "orientations_deg": [0.0],
        "planners": ["nbv_whole_plant", "random"],
        "attention": ["whole_plant"],
        "max_views": 2,
        "sweeps": { "occlusion": [0.0, 0.5], "samples_per_cell": [1], "resolution": [0.005] }
    });
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn oracle_command_passes_every_suite() {
    let out = bench(&["oracle", "--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let verdicts: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(verdicts.len(), 5);
    assert!(verdicts.iter().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn config_command_prints_complete_configs() {
    let desk = bench(&["config"]);
    assert!(desk.status.success());
    let desk: serde_json::Value = serde_json::from_str(&stdout(&desk)).unwrap();
    assert_eq!(desk["plant_seeds"].as_array().unwrap().len(), 5);
    assert_eq!(desk["orientations_deg"].as_array().unwrap().len(), 6);
    assert_eq!(desk["map"]["resolution"], 0.003);
    let paper = bench(&["config", "--paper"]);
    let paper: serde_json::Value = serde_json::from_str(&stdout(&paper)).unwrap();
    assert_eq!(paper["plant_seeds"].as_array().unwrap().len(), 10);
    assert_eq!(paper["orientations_deg"].as_array().unwrap().len(), 12);

    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let merged = bench(&["--config", config.to_str().unwrap(), "--workers", "3", "config"]);
    let merged: serde_json::Value = serde_json::from_str(&stdout(&merged)).unwrap();
    assert_eq!(merged["max_views"], 2);
    assert_eq!(merged["workers"], 3);
    assert_eq!(merged["sector"]["radius"], 0.4);
}

#[test]
fn run_plot_and_sweep_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out_dir = dir.path().join("study");
    let args = ["--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--workers", "1"];

    let run = bench(&[&args[..], &["run", "--seed", "4"]].concat());
    assert!(run.status.success(), "{}", stderr(&run));
    for file in ["trials.csv", "summary.csv", "thresholds.csv", "config.json", "plots/f1_whole_plant.svg"] {
        assert!(out_dir.join(file).is_file(), "{file}");
    }
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["master_seed"], 4);
    assert_eq!(written["workers"], 1);

    let plots = dir.path().join("replotted");
    let plot = bench(&["--out", plots.to_str().unwrap(), "plot", out_dir.join("summary.csv").to_str().unwrap()]);
    assert!(plot.status.success(), "{}", stderr(&plot));
    assert_eq!(
        std::fs::read_to_string(plots.join("f1_whole_plant.svg")).unwrap(),
        std::fs::read_to_string(out_dir.join("plots/f1_whole_plant.svg")).unwrap()
    );

    let sweep = bench(&[&args[..], &["sweep", "--axis", "occlusion"]].concat());
    assert!(sweep.status.success(), "{}", stderr(&sweep));
    for level in ["removal_0", "removal_0.5"] {
        assert!(out_dir.join("sweep_occlusion").join(level).join("summary.csv").is_file(), "{level}");
    }
}

#[test]
fn trial_prints_trace_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let out = bench(&[
        "--config",
        config.to_str().unwrap(),
        "trial",
        "--planner",
        "nbv",
        "--attention",
        "leaf_nodes",
        "--seed",
        "2",
        "--orientation",
        "60",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let csv_start = text.find("planner,plant_seed").expect("metrics table");
    let trace: serde_json::Value = serde_json::from_str(&text[..csv_start]).unwrap();
    assert_eq!(trace["planner"], "nbv_leaf_nodes");
    assert_eq!(trace["views"].as_array().unwrap().len(), 2);
    let rows: Vec<&str> = text[csv_start..].lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("nbv_leaf_nodes,2,60,leaf_nodes,")), "{rows:?}");
}

#[test]
fn invalid_arguments_fail_cleanly() {
    let bad_axis = bench(&["sweep", "--axis", "lighting"]);
    assert!(!bad_axis.status.success());
    assert!(stderr(&bad_axis).contains("unknown sweep axis"));

    let ambiguous = bench(&["trial", "--planner", "predefined"]);
    assert!(!ambiguous.status.success());

    let missing = bench(&["--config", "/nonexistent/config.json", "run"]);
    assert!(!missing.status.success());
    assert!(stderr(&missing).contains("loading"));
}
