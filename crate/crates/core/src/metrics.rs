//! Accuracy and error metrics, improvement rates, and multi-run aggregation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "CA")]
    Ca,
    #[serde(rename = "MSE")]
    Mse,
    #[serde(rename = "RMSE")]
    Rmse,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Ca => "CA",
            MetricKind::Mse => "MSE",
            MetricKind::Rmse => "RMSE",
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, MetricKind::Ca)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CA" => Ok(MetricKind::Ca),
            "MSE" => Ok(MetricKind::Mse),
            "RMSE" => Ok(MetricKind::Rmse),
            _ => Err(Error::invalid(format!("unknown metric `{s}`"))),
        }
    }
}

fn check_pair(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::invalid("metric over an empty set"));
    }
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: pred.len(),
            context: "predictions vs targets",
        });
    }
    Ok(())
}

/// Nearest class code, ties away from zero, clamped to `[0, C-1]`.
pub fn decode_class(pred: f64, num_classes: usize) -> usize {
    let hi = num_classes.saturating_sub(1) as f64;
    pred.round().clamp(0.0, hi) as usize
}

/// Fraction of predictions whose decoded class equals the target code.
pub fn classification_accuracy(pred: &[f64], target: &[f64], num_classes: usize) -> Result<f64> {
    check_pair(pred, target)?;
    if num_classes < 1 {
        return Err(Error::invalid("num_classes must be positive"));
    }
    let correct = pred
        .iter()
        .zip(target)
        .filter(|(p, t)| decode_class(**p, num_classes) as f64 == **t)
        .count();
    Ok(correct as f64 / pred.len() as f64)
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (t - p) * (t - p)).sum();
    Ok(sum / pred.len() as f64)
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    mse(pred, target).map(f64::sqrt)
}

/// Relative gain of `candidate` over `baseline`, signed so that a positive
/// rate always means the candidate is better.
pub fn improvement_rate(candidate: f64, baseline: f64, kind: MetricKind) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::UndefinedRate);
    }
    Ok(if kind.higher_is_better() {
        (candidate - baseline) / baseline
    } else {
        (baseline - candidate) / baseline
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Test => "test",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub metric_kind: MetricKind,
    pub value: f64,
    pub run_seed: u64,
    pub partition: Partition,
}

/// Mean and sample standard deviation over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metric_kind: MetricKind,
    pub per_run: Vec<RunResult>,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one run.
    pub std: f64,
}

impl EvalReport {
    pub fn len(&self) -> usize {
        self.per_run.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_run.is_empty()
    }
}

/// Mean and sample standard deviation of raw values.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("cannot aggregate zero runs"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

pub fn aggregate(results: &[RunResult]) -> Result<EvalReport> {
    let first = results
        .first()
        .ok_or_else(|| Error::invalid("cannot aggregate zero runs"))?;
    if let Some(other) = results.iter().find(|r| r.metric_kind != first.metric_kind) {
        return Err(Error::invalid(format!(
            "mixed metric kinds: {} and {}",
            first.metric_kind, other.metric_kind
        )));
    }
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let (mean, std) = mean_std(&values)?;
    Ok(EvalReport {
        metric_kind: first.metric_kind,
        per_run: results.to_vec(),
        mean,
        std,
    })
}
