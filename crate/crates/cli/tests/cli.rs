use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bbfnn_cli::report::{read_raw, read_summary, summarize};
use bbfnn_cli::{run_experiment, ExperimentConfig};
use bbfnn_core::ModelKind;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bbfnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbfnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_into(config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = fixture(config);
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bbfnn(&args)
}

#[test]
fn validate_echoes_a_parseable_config() {
    let out = bbfnn(&["validate", fixture("toy_classification.cfg").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echoed = String::from_utf8(out.stdout).unwrap();
    let original = ExperimentConfig::from_file(&fixture("toy_classification.cfg")).unwrap();
    let reparsed = bbfnn_cli::parse_config(&echoed, &original.base_dir).unwrap();
    assert_eq!(reparsed, original);
}

#[test]
fn invalid_config_fails_with_line_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("toy_classification.cfg"))
        .unwrap()
        .replace("rec_spectral_radius = 0.5", "rec_spectral_radius = 1.2\nhiden = 4");
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, text).unwrap();
    let out = bbfnn(&["validate", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rec_spectral_radius: must be < 1"), "{err}");
    assert!(err.contains("unknown key `hiden`"), "{err}");
    assert!(err.contains("line 25"), "{err}");
}

#[test]
fn missing_data_is_reported_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(
        "toy_classification.cfg",
        dir.path(),
        &["--dataset", "/nonexistent/data.csv"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("file not found"));
    assert!(!dir.path().join("summary.csv").exists());
}

#[test]
fn classification_run_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into("toy_classification.cfg", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let raw = read_raw(&dir.path().join("raw.csv")).unwrap();
    // 4 models x 2 noise levels x 2 runs x 3 folds, one train and one test row each
    assert_eq!(raw.len(), 4 * 2 * 2 * 3 * 2);
    let summary = read_summary(&dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 4 * 2 * 2);
    let improvement = std::fs::read_to_string(dir.path().join("improvement.csv")).unwrap();
    let lines: Vec<&str> = improvement.lines().collect();
    assert_eq!(lines[0], "dataset,noise,partition,metric,ir1_pct,ir2_pct,ir3_pct");
    assert_eq!(lines.len(), 1 + 2);
    assert!(!dir.path().join("predictions.csv").exists());
}

#[test]
fn summary_matches_recomputation_from_raw() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into("toy_series.cfg", dir.path(), &[]).status.success());
    let raw = read_raw(&dir.path().join("raw.csv")).unwrap();
    let written = read_summary(&dir.path().join("summary.csv")).unwrap();
    let recomputed = summarize(&raw).unwrap();
    assert_eq!(written.len(), recomputed.len());
    for (w, r) in written.iter().zip(&recomputed) {
        assert_eq!((w.model, &w.noise, &w.partition, w.n), (r.model, &r.noise, &r.partition, r.n));
        assert!((w.mean - r.mean).abs() <= 1e-9 && (w.std - r.std).abs() <= 1e-9);
    }
    let partitions: Vec<&str> = written.iter().map(|s| s.partition.as_str()).collect();
    assert!(partitions.contains(&"test1") && partitions.contains(&"test2"));
}

#[test]
fn prediction_run_writes_series_in_original_units() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into("toy_series.cfg", dir.path(), &["--snr", "clean"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    let series: Vec<f64> = std::fs::read_to_string(fixture("toy_series.csv"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let index: usize = f[3].parse().unwrap();
        let target: f64 = f[4].parse().unwrap();
        // index counts lagged samples; the first sample is series[3]
        assert_eq!(target, series[index + 3]);
        rows += 1;
    }
    assert_eq!(rows, 2 * 27);
}

#[test]
fn report_subcommand_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into("toy_classification.cfg", dir.path(), &[]).status.success());
    let rep = tempfile::tempdir().unwrap();
    let out = bbfnn(&[
        "report",
        dir.path().join("raw.csv").to_str().unwrap(),
        "--out",
        rep.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["summary.csv", "improvement.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join(name)).unwrap(),
            std::fs::read(rep.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(
        "toy_classification.cfg",
        dir.path(),
        &["--model", "tanh-elm", "--runs", "1", "--snr", "clean", "--folds", "2", "--hidden", "3"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_summary(&dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 2);
    assert!(summary.iter().all(|s| s.model == ModelKind::TanhElm && s.n == 2));
}

#[test]
fn adding_a_model_leaves_other_results_unchanged() {
    let mut cfg = ExperimentConfig::from_file(&fixture("toy_classification.cfg")).unwrap();
    let full = run_experiment(&cfg).unwrap();
    cfg.models.retain(|m| m.kind == ModelKind::ElmBbfnn);
    let alone = run_experiment(&cfg).unwrap();
    let from_full: Vec<_> = full.raw.iter().filter(|r| r.model == ModelKind::ElmBbfnn).cloned().collect();
    assert_eq!(from_full, alone.raw);
}

#[test]
fn worker_count_does_not_change_results() {
    let mut cfg = ExperimentConfig::from_file(&fixture("toy_series.cfg")).unwrap();
    cfg.protocol.workers = 1;
    let serial = run_experiment(&cfg).unwrap();
    cfg.protocol.workers = 4;
    assert_eq!(run_experiment(&cfg).unwrap(), serial);
}

#[test]
fn shipped_configs_all_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert_eq!(count, 21);
}
