//! Dataset ingestion and the preprocessing protocol: CSV loading, lag
//! embedding for time series, min-max normalization, hold-out and k-fold
//! splitting, and Gaussian noise at a given signal-to-noise ratio.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Single target column holding class codes `0..num_classes`.
    Classification { num_classes: usize },
    /// Time-series prediction; row order is time order.
    Prediction,
    Regression,
}

impl TaskKind {
    pub fn is_temporal(self) -> bool {
        matches!(self, TaskKind::Prediction)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub inputs: Matrix,
    pub targets: Matrix,
    pub task: TaskKind,
}

impl Dataset {
    pub fn new(name: impl Into<String>, inputs: Matrix, targets: Matrix, task: TaskKind) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::DimensionMismatch {
                expected: inputs.rows(),
                got: targets.rows(),
                context: "target rows",
            });
        }
        if let TaskKind::Classification { num_classes } = task {
            if num_classes < 2 {
                return Err(Error::invalid("classification needs at least two classes"));
            }
            if targets.cols() != 1 {
                return Err(Error::invalid(
                    "classification targets must be a single class-code column",
                ));
            }
            for (i, &c) in targets.as_slice().iter().enumerate() {
                if c.fract() != 0.0 || c < 0.0 || c >= num_classes as f64 {
                    return Err(Error::invalid(format!(
                        "row {i}: class code {c} outside 0..{num_classes}"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            inputs,
            targets,
            task,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.cols()
    }

    /// Sub-dataset with the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            name: self.name.clone(),
            inputs: self.inputs.select_rows(indices)?,
            targets: self.targets.select_rows(indices)?,
            task: self.task,
        })
    }

    /// Splits off the first `n_train` rows as training data.
    pub fn split_at(&self, n_train: usize) -> Result<(Self, Self)> {
        if n_train == 0 || n_train >= self.len() {
            return Err(Error::invalid(format!(
                "split at {n_train} leaves an empty partition of {} rows",
                self.len()
            )));
        }
        let train: Vec<usize> = (0..n_train).collect();
        let test: Vec<usize> = (n_train..self.len()).collect();
        Ok((self.select(&train)?, self.select(&test)?))
    }
}

/// Raw numeric table read from CSV, before column roles are assigned.
pub fn read_table(path: &Path, header: bool) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: path.to_owned(),
                        line,
                        message: format!("column {}: `{cell}` is not a finite number", col + 1),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: "no data rows".into(),
        });
    }
    Matrix::from_rows(&rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("ragged row: {len} fields, expected {expected_len}"),
        },
        other => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Which CSV columns (0-based) are inputs and which are targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub inputs: Vec<usize>,
    pub targets: Vec<usize>,
    pub header: bool,
}

impl CsvSchema {
    pub fn new(inputs: Vec<usize>, targets: Vec<usize>, header: bool) -> Self {
        Self {
            inputs,
            targets,
            header,
        }
    }

    fn check_columns(&self, width: usize) -> Result<()> {
        if self.inputs.is_empty() || self.targets.is_empty() {
            return Err(Error::invalid("schema needs at least one input and one target column"));
        }
        if let Some(c) = self.inputs.iter().chain(&self.targets).find(|c| **c >= width) {
            return Err(Error::invalid(format!(
                "schema references column {c} but the table has {width} columns"
            )));
        }
        Ok(())
    }
}

fn columns(table: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(table.rows(), cols.len(), |i, j| table.get(i, cols[j]))
}

/// Assigns column roles to a raw table.
pub fn dataset_from_table(
    name: &str,
    table: &Matrix,
    schema: &CsvSchema,
    task: TaskKind,
) -> Result<Dataset> {
    schema.check_columns(table.cols())?;
    Dataset::new(name, columns(table, &schema.inputs), columns(table, &schema.targets), task)
}

/// Loads a dataset; row order is kept exactly as on disk.
pub fn load_csv(path: &Path, schema: &CsvSchema, task: TaskKind) -> Result<Dataset> {
    let table = read_table(path, schema.header)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    dataset_from_table(&name, &table, schema, task)
}

/// One lagged input feature: column `column` taken `lag` steps back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagSpec {
    pub column: usize,
    pub lag: usize,
}

impl LagSpec {
    /// `y(t-1) .. y(t-order)` of a single column, nearest lag first.
    pub fn autoregressive(column: usize, order: usize) -> Vec<LagSpec> {
        (1..=order).map(|lag| LagSpec { column, lag }).collect()
    }
}

/// Turns a time-ordered table into supervised pairs: for each time `t` with
/// every lag available, inputs are the lagged values and the target is
/// `target_column` at `t`.
pub fn lag_embed(
    name: &str,
    table: &Matrix,
    lags: &[LagSpec],
    target_column: usize,
) -> Result<Dataset> {
    if lags.is_empty() {
        return Err(Error::invalid("lag embedding needs at least one lagged input"));
    }
    if let Some(bad) = lags.iter().find(|l| l.lag == 0) {
        return Err(Error::invalid(format!(
            "lag 0 on column {} would leak the target time step",
            bad.column
        )));
    }
    let width = table.cols();
    if target_column >= width || lags.iter().any(|l| l.column >= width) {
        return Err(Error::invalid(format!(
            "lag embedding references a column beyond the table width {width}"
        )));
    }
    let max_lag = lags.iter().map(|l| l.lag).max().unwrap_or(0);
    if table.rows() <= max_lag {
        return Err(Error::invalid(format!(
            "series of length {} is too short for lag {max_lag}",
            table.rows()
        )));
    }
    let m = table.rows() - max_lag;
    let inputs = Matrix::from_fn(m, lags.len(), |i, j| {
        let t = i + max_lag;
        table.get(t - lags[j].lag, lags[j].column)
    });
    let targets = Matrix::from_fn(m, 1, |i, _| table.get(i + max_lag, target_column));
    Dataset::new(name, inputs, targets, TaskKind::Prediction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormRange {
    /// `[0, 1]`
    Unit,
    /// `[-1, 1]`
    Symmetric,
    None,
}

impl NormRange {
    fn bounds(self) -> Option<(f64, f64)> {
        match self {
            NormRange::Unit => Some((0.0, 1.0)),
            NormRange::Symmetric => Some((-1.0, 1.0)),
            NormRange::None => None,
        }
    }
}

impl FromStr for NormRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(NormRange::Unit),
            "symmetric" => Ok(NormRange::Symmetric),
            "none" => Ok(NormRange::None),
            _ => Err(Error::invalid(format!(
                "unknown normalization `{s}` (expected unit, symmetric or none)"
            ))),
        }
    }
}

impl fmt::Display for NormRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormRange::Unit => "unit",
            NormRange::Symmetric => "symmetric",
            NormRange::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnScale {
    pub min: f64,
    pub max: f64,
}

/// Affine min-max maps fitted on one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub range: NormRange,
    pub inputs: Vec<ColumnScale>,
    /// Present only when targets are normalized (time-series prediction).
    pub targets: Option<Vec<ColumnScale>>,
}

fn fit_columns(m: &Matrix) -> Vec<ColumnScale> {
    (0..m.cols())
        .map(|j| {
            let col = m.column(j);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ColumnScale { min, max }
        })
        .collect()
}

fn map_columns(m: &Matrix, scales: &[ColumnScale], (lo, hi): (f64, f64), inverse: bool) -> Result<Matrix> {
    if scales.len() != m.cols() {
        return Err(Error::DimensionMismatch {
            expected: scales.len(),
            got: m.cols(),
            context: "normalized column count",
        });
    }
    let mid = 0.5 * (lo + hi);
    Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        let ColumnScale { min, max } = scales[j];
        let v = m.get(i, j);
        let span = max - min;
        match (span > 0.0, inverse) {
            (true, false) => lo + (v - min) * (hi - lo) / span,
            (true, true) => min + (v - lo) * span / (hi - lo),
            (false, false) => mid,
            (false, true) => min,
        }
    }))
}

impl NormStats {
    pub fn fit(ds: &Dataset, range: NormRange) -> Self {
        let targets = matches!(ds.task, TaskKind::Prediction).then(|| fit_columns(&ds.targets));
        Self {
            range,
            inputs: fit_columns(&ds.inputs),
            targets,
        }
    }

    /// Applies the fitted maps. Values outside the fitted range map
    /// outside the target interval; nothing is clipped.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let Some(bounds) = self.range.bounds() else {
            return Ok(ds.clone());
        };
        let inputs = map_columns(&ds.inputs, &self.inputs, bounds, false)?;
        let targets = match &self.targets {
            Some(t) => map_columns(&ds.targets, t, bounds, false)?,
            None => ds.targets.clone(),
        };
        Ok(Dataset { inputs, targets, ..ds.clone() })
    }

    /// Inverse of [`NormStats::apply`] (constant columns map back to their value).
    pub fn invert(&self, ds: &Dataset) -> Result<Dataset> {
        let Some(bounds) = self.range.bounds() else {
            return Ok(ds.clone());
        };
        let inputs = map_columns(&ds.inputs, &self.inputs, bounds, true)?;
        let targets = match &self.targets {
            Some(t) => map_columns(&ds.targets, t, bounds, true)?,
            None => ds.targets.clone(),
        };
        Ok(Dataset { inputs, targets, ..ds.clone() })
    }
}

/// Fits per-column min-max maps on `ds` and applies them.
///
/// Inputs are always mapped. Targets are mapped only for time-series
/// prediction: class codes and regression targets stay as they are.
/// Constant columns map to the midpoint of the range.
pub fn normalize(ds: &Dataset, range: NormRange) -> Result<(Dataset, NormStats)> {
    let stats = NormStats::fit(ds, range);
    Ok((stats.apply(ds)?, stats))
}

fn shuffled_indices(m: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Hold-out split with `round(train_fraction * M)` training rows.
///
/// Time-series datasets are never shuffled: the first rows train. Other
/// tasks are shuffled with `seed` when `shuffle` is set.
pub fn split_holdout(
    ds: &Dataset,
    train_fraction: f64,
    shuffle: bool,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let m = ds.len();
    let n_train = (train_fraction * m as f64).round() as usize;
    if n_train == 0 || n_train >= m {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} on {m} rows leaves an empty partition"
        )));
    }
    split_holdout_rows(ds, n_train, shuffle, seed)
}

/// Hold-out split with exactly `n_train` training rows, shuffled under the
/// same rules as [`split_holdout`].
pub fn split_holdout_rows(
    ds: &Dataset,
    n_train: usize,
    shuffle: bool,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let m = ds.len();
    if n_train == 0 || n_train >= m {
        return Err(Error::invalid(format!(
            "{n_train} training rows out of {m} leaves an empty partition"
        )));
    }
    if shuffle && !ds.task.is_temporal() {
        let idx = shuffled_indices(m, seed);
        Ok((ds.select(&idx[..n_train])?, ds.select(&idx[n_train..])?))
    } else {
        ds.split_at(n_train)
    }
}

/// Test-fold index sets for k-fold cross-validation.
///
/// Folds are contiguous blocks of near-equal size (the first `M % k` folds
/// are one row larger). With `shuffle`, rows are permuted by `seed` first.
pub fn kfold_indices(m: usize, k: usize, shuffle: bool, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > m {
        return Err(Error::invalid(format!("k = {k} exceeds the {m} available rows")));
    }
    let order = if shuffle {
        shuffled_indices(m, seed)
    } else {
        (0..m).collect()
    };
    let (base, extra) = (m / k, m % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// A train/test pair from cross-validation.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Dataset,
    pub test: Dataset,
    pub test_indices: Vec<usize>,
}

/// k-fold cross-validation. Time-series datasets use contiguous blocks;
/// others are shuffled by `seed`. Training rows keep their relative order.
pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let m = ds.len();
    let folds = kfold_indices(m, k, !ds.task.is_temporal(), seed)?;
    folds
        .into_iter()
        .map(|test_indices| {
            let mut in_test = vec![false; m];
            for &i in &test_indices {
                in_test[i] = true;
            }
            let train_idx: Vec<usize> = (0..m).filter(|i| !in_test[*i]).collect();
            Ok(Fold {
                train: ds.select(&train_idx)?,
                test: ds.select(&test_indices)?,
                test_indices,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    Train,
    Test,
    Both,
}

impl FromStr for NoiseTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(NoiseTarget::Train),
            "test" => Ok(NoiseTarget::Test),
            "both" => Ok(NoiseTarget::Both),
            _ => Err(Error::invalid(format!(
                "unknown noise target `{s}` (expected train, test or both)"
            ))),
        }
    }
}

impl fmt::Display for NoiseTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseTarget::Train => "train",
            NoiseTarget::Test => "test",
            NoiseTarget::Both => "both",
        })
    }
}

/// Additive white Gaussian noise at a fixed SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub apply_to: NoiseTarget,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, apply_to: NoiseTarget) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
        }
        Ok(Self { snr_db, apply_to })
    }

    /// Noises the partitions selected by `apply_to`, train first.
    pub fn apply<R: Rng>(&self, train: &Dataset, test: &Dataset, rng: &mut R) -> Result<(Dataset, Dataset)> {
        let noisy_train = match self.apply_to {
            NoiseTarget::Train | NoiseTarget::Both => inject_noise(train, self.snr_db, rng)?,
            NoiseTarget::Test => train.clone(),
        };
        let noisy_test = match self.apply_to {
            NoiseTarget::Test | NoiseTarget::Both => inject_noise(test, self.snr_db, rng)?,
            NoiseTarget::Train => test.clone(),
        };
        Ok((noisy_train, noisy_test))
    }
}

/// Adds zero-mean Gaussian noise to every input entry.
///
/// Each column gets variance `P_c / 10^(snr_db / 10)` where `P_c` is the
/// column's mean square on this partition. Targets are untouched.
pub fn inject_noise<R: Rng + ?Sized>(ds: &Dataset, snr_db: f64, rng: &mut R) -> Result<Dataset> {
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
    }
    let (m, k) = ds.inputs.shape();
    let ratio = 10f64.powf(snr_db / 10.0);
    let noise: Vec<Option<Normal<f64>>> = (0..k)
        .map(|j| {
            let power = ds.inputs.column(j).iter().map(|v| v * v).sum::<f64>() / m as f64;
            let std = (power / ratio).sqrt();
            (std > 0.0).then(|| Normal::new(0.0, std).expect("finite positive std"))
        })
        .collect();
    let mut data = ds.inputs.as_slice().to_vec();
    for row in data.chunks_exact_mut(k) {
        for (v, dist) in row.iter_mut().zip(&noise) {
            if let Some(d) = dist {
                *v += d.sample(rng);
            }
        }
    }
    Ok(Dataset {
        inputs: Matrix::from_row_major(m, k, data)?,
        ..ds.clone()
    })
}
