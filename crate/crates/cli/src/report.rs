//! Result tables and their CSV form.
//!
//! Column order is fixed:
//!
//! * `raw.csv`: dataset, model, noise, run, fold, partition, metric, value, seed
//! * `summary.csv`: dataset, model, noise, partition, metric, n, mean, std
//! * `improvement.csv`: dataset, noise, partition, metric, ir1_pct, ir2_pct, ir3_pct
//! * `predictions.csv`: dataset, model, noise, index, target, prediction
//!
//! Floats use Rust's shortest round-trip formatting, so reading a file back
//! gives the exact values that were written.

use std::path::Path;

use bbfnn_core::{improvement_rate, mean_std, MetricKind, ModelKind};

use crate::error::{CliError, Result};

pub const RAW_FILE: &str = "raw.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const IMPROVEMENT_FILE: &str = "improvement.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

const RAW_HEADER: [&str; 9] = ["dataset", "model", "noise", "run", "fold", "partition", "metric", "value", "seed"];
const SUMMARY_HEADER: [&str; 8] = ["dataset", "model", "noise", "partition", "metric", "n", "mean", "std"];
const IMPROVEMENT_HEADER: [&str; 7] = ["dataset", "noise", "partition", "metric", "ir1_pct", "ir2_pct", "ir3_pct"];
const PREDICTIONS_HEADER: [&str; 6] = ["dataset", "model", "noise", "index", "target", "prediction"];

/// Baselines of the three improvement rates, in column order.
pub const IR_BASELINES: [ModelKind; 3] = [ModelKind::TanhElm, ModelKind::RecTanhElm, ModelKind::ElmBbfnn];
pub const IR_CANDIDATE: ModelKind = ModelKind::RecElmBbfnn;

/// One score from one trained model on one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub dataset: String,
    pub model: ModelKind,
    pub noise: String,
    pub run: usize,
    pub fold: usize,
    /// `train`, `test`, or `test1`, `test2`, ... for windowed test sets.
    pub partition: String,
    pub metric: MetricKind,
    pub value: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub model: ModelKind,
    pub noise: String,
    pub partition: String,
    pub metric: MetricKind,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub dataset: String,
    pub noise: String,
    pub partition: String,
    pub metric: MetricKind,
    /// Percent; `None` when the baseline is absent or zero.
    pub ir_pct: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub dataset: String,
    pub model: ModelKind,
    pub noise: String,
    pub index: usize,
    pub target: f64,
    pub prediction: f64,
}

/// Mean and sample std per (dataset, model, noise, partition, metric), in
/// order of first appearance. Runs and folds are pooled.
pub fn summarize(raw: &[RawRecord]) -> Result<Vec<SummaryRow>> {
    type Key<'a> = (&'a str, ModelKind, &'a str, &'a str, MetricKind);
    let mut groups: Vec<(Key<'_>, Vec<f64>)> = Vec::new();
    for r in raw {
        let key = (r.dataset.as_str(), r.model, r.noise.as_str(), r.partition.as_str(), r.metric);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, values)) => values.push(r.value),
            None => groups.push((key, vec![r.value])),
        }
    }
    groups
        .into_iter()
        .map(|((dataset, model, noise, partition, metric), values)| {
            let (mean, std) = mean_std(&values)?;
            Ok(SummaryRow {
                dataset: dataset.to_string(),
                model,
                noise: noise.to_string(),
                partition: partition.to_string(),
                metric,
                n: values.len(),
                mean,
                std,
            })
        })
        .collect()
}

/// Improvement of the recurrent beta network's mean over each baseline's
/// mean, for every test cell where the candidate was run.
pub fn improvements(summary: &[SummaryRow]) -> Vec<ImprovementRow> {
    summary
        .iter()
        .filter(|s| s.model == IR_CANDIDATE && s.partition != "train")
        .map(|cand| {
            let ir_pct = IR_BASELINES.map(|base| {
                summary
                    .iter()
                    .find(|s| {
                        s.model == base
                            && s.dataset == cand.dataset
                            && s.noise == cand.noise
                            && s.partition == cand.partition
                            && s.metric == cand.metric
                    })
                    .and_then(|b| improvement_rate(cand.mean, b.mean, cand.metric).ok())
                    .map(|ir| 100.0 * ir)
            });
            ImprovementRow {
                dataset: cand.dataset.clone(),
                noise: cand.noise.clone(),
                partition: cand.partition.clone(),
                metric: cand.metric,
                ir_pct,
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |source| CliError::Csv {
        path: "<memory>".into(),
        source,
    };
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Report(format!("flushing CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Report(e.to_string()))
}

pub fn raw_csv(raw: &[RawRecord]) -> Result<String> {
    to_csv(
        &RAW_HEADER,
        raw.iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.model.to_string(),
                r.noise.clone(),
                r.run.to_string(),
                r.fold.to_string(),
                r.partition.clone(),
                r.metric.to_string(),
                r.value.to_string(),
                r.seed.to_string(),
            ]
        }),
    )
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    to_csv(
        &SUMMARY_HEADER,
        rows.iter().map(|s| {
            vec![
                s.dataset.clone(),
                s.model.to_string(),
                s.noise.clone(),
                s.partition.clone(),
                s.metric.to_string(),
                s.n.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
            ]
        }),
    )
}

pub fn improvement_csv(rows: &[ImprovementRow]) -> Result<String> {
    to_csv(
        &IMPROVEMENT_HEADER,
        rows.iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.noise.clone(),
                r.partition.clone(),
                r.metric.to_string(),
                opt(r.ir_pct[0]),
                opt(r.ir_pct[1]),
                opt(r.ir_pct[2]),
            ]
        }),
    )
}

pub fn predictions_csv(rows: &[PredictionRow]) -> Result<String> {
    to_csv(
        &PREDICTIONS_HEADER,
        rows.iter().map(|p| {
            vec![
                p.dataset.clone(),
                p.model.to_string(),
                p.noise.clone(),
                p.index.to_string(),
                p.target.to_string(),
                p.prediction.to_string(),
            ]
        }),
    )
}

pub fn read_raw(path: &Path) -> Result<Vec<RawRecord>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RAW_HEADER) {
        return Err(CliError::Report(format!(
            "{}: expected header {}, found {}",
            path.display(),
            RAW_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let bad = |field: &str, e: &dyn std::fmt::Display| {
            CliError::Report(format!("{}:{line}: bad {field}: {e}", path.display()))
        };
        let field = |k: usize| rec.get(k).unwrap_or("");
        out.push(RawRecord {
            dataset: field(0).to_string(),
            model: field(1).parse().map_err(|e| bad("model", &e))?,
            noise: field(2).to_string(),
            run: field(3).parse().map_err(|e| bad("run", &e))?,
            fold: field(4).parse().map_err(|e| bad("fold", &e))?,
            partition: field(5).to_string(),
            metric: field(6).parse().map_err(|e| bad("metric", &e))?,
            value: field(7).parse().map_err(|e| bad("value", &e))?,
            seed: field(8).parse().map_err(|e| bad("seed", &e))?,
        });
    }
    if out.is_empty() {
        return Err(CliError::Report(format!("{}: no result rows", path.display())));
    }
    Ok(out)
}

/// Reads a summary file back (used to check that summaries match their
/// raw results).
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let bad = |e: &dyn std::fmt::Display| CliError::Report(format!("{}: {e}", path.display()));
        out.push(SummaryRow {
            dataset: f(0).to_string(),
            model: f(1).parse().map_err(|e| bad(&e))?,
            noise: f(2).to_string(),
            partition: f(3).to_string(),
            metric: f(4).parse().map_err(|e| bad(&e))?,
            n: f(5).parse().map_err(|e| bad(&e))?,
            mean: f(6).parse().map_err(|e| bad(&e))?,
            std: f(7).parse().map_err(|e| bad(&e))?,
        });
    }
    Ok(out)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(model: ModelKind, run: usize, value: f64) -> RawRecord {
        RawRecord {
            dataset: "d".into(),
            model,
            noise: "clean".into(),
            run,
            fold: 0,
            partition: "test".into(),
            metric: MetricKind::Ca,
            value,
            seed: 7,
        }
    }

    #[test]
    fn summary_pools_runs_per_cell() {
        let raw = vec![
            rec(ModelKind::TanhElm, 0, 1.0),
            rec(ModelKind::RecElmBbfnn, 0, 0.9),
            rec(ModelKind::TanhElm, 1, 3.0),
        ];
        let s = summarize(&raw).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].model, ModelKind::TanhElm);
        assert_eq!((s[0].n, s[0].mean), (2, 2.0));
        assert!((s[0].std - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn improvement_columns_follow_baseline_order() {
        let raw = vec![
            rec(ModelKind::TanhElm, 0, 0.8),
            rec(ModelKind::ElmBbfnn, 0, 0.5),
            rec(ModelKind::RecElmBbfnn, 0, 0.9),
        ];
        let ir = improvements(&summarize(&raw).unwrap());
        assert_eq!(ir.len(), 1);
        assert!((ir[0].ir_pct[0].unwrap() - 12.5).abs() < 1e-9);
        assert_eq!(ir[0].ir_pct[1], None);
        assert!((ir[0].ir_pct[2].unwrap() - 80.0).abs() < 1e-9);
    }

    #[test]
    fn raw_csv_round_trips() {
        let raw = vec![rec(ModelKind::TanhElm, 0, 0.1 + 0.2), rec(ModelKind::RecTanhElm, 3, 1e-300)];
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), RAW_FILE, &raw_csv(&raw).unwrap()).unwrap();
        assert_eq!(read_raw(&dir.path().join(RAW_FILE)).unwrap(), raw);
    }
}
