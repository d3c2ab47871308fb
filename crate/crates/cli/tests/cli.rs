use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn pulsekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulsekit"))
        .current_dir(repo_root())
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn unknown_flag_exits_with_usage() {
    let out = pulsekit(&["run", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bare_run_is_a_usage_error() {
    assert_eq!(pulsekit(&["run"]).status.code(), Some(2));
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.yaml");
    std::fs::write(
        &cfg,
        "experiment_name: x\ndata:\n  dataset_name: synthetic_ppg\n  missingness: {type: extended, percent: 0.2}\nmodel: {name: BDCTransformer}\ntrain: {}\n",
    )
    .unwrap();
    let results = dir.path().join("results");
    let out = pulsekit(&[
        "run",
        "-c",
        cfg.to_str().unwrap(),
        "--results-dir",
        results.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BDCTransformer"));
    assert!(!results.exists());
}

#[test]
fn missing_config_file_exits_one() {
    let out = pulsekit(&["run", "-c", "Nope/none.yaml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_visualize_export() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().to_str().unwrap();
    for m in ["MeanFill", "LinearInterp"] {
        let out = pulsekit(&[
            "run",
            "-c",
            &format!("{m}/synthetic_extended.yaml"),
            "-train",
            "False",
            "--results-dir",
            results,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    let svg = dir.path().join("plot.svg");
    let out = pulsekit(&[
        "visualize",
        "--task",
        "synthetic_extended",
        "--missingness-type",
        "extended",
        "--missingness-percent",
        "0.3",
        "--models",
        "mean_fill,linear_interp",
        "--sample-index",
        "0",
        "--x-range",
        "100000",
        "--save-path",
        svg.to_str().unwrap(),
        "--results-dir",
        results,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches(r#"class="series""#).count(), 3);
    assert_eq!(text.matches(r#"class="missing""#).count(), 1);

    let wrong = pulsekit(&[
        "visualize",
        "--task",
        "synthetic_extended",
        "--missingness-type",
        "transient",
        "--missingness-percent",
        "0.3",
        "--models",
        "mean_fill",
        "--save-path",
        svg.to_str().unwrap(),
        "--results-dir",
        results,
    ]);
    assert_eq!(wrong.status.code(), Some(1));

    let merged = dir.path().join("merged.json");
    let out = pulsekit(&[
        "export",
        "--experiment",
        "synthetic_extended",
        "--models",
        "mean_fill,linear_interp",
        "-o",
        merged.to_str().unwrap(),
        "--results-dir",
        results,
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(merged).unwrap()).unwrap();
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["models"].as_array().unwrap().len(), 2);
    assert_eq!(doc["samples"].as_array().unwrap().len(), 50);
    assert_eq!(
        doc["samples"][0]["imputations"].as_object().unwrap().len(),
        2
    );
}
