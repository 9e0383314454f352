//! Runs an experiment: every (model, noise level, run, fold) cell is
//! normalized, noised, trained and scored independently.

use std::ops::Range;
use std::path::Path;

use bbfnn_core::{
    classification_accuracy, kfold_indices, lag_embed, mse, read_table, rmse, split_holdout_rows,
    train, Dataset, Matrix, MetricKind, ModelConfig, ModelKind, NoiseSpec, NormStats, TaskKind,
};
use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Columns, ExperimentConfig, ModelSettings, NoiseLevel, SplitMode, TrainSize};
use crate::error::{CliError, Result};
use crate::report::{
    improvement_csv, improvements, predictions_csv, raw_csv, summarize, summary_csv, write_file,
    ImprovementRow, PredictionRow, RawRecord, SummaryRow, IMPROVEMENT_FILE, PREDICTIONS_FILE,
    RAW_FILE, SUMMARY_FILE,
};

/// 64-bit FNV-1a over the parts, with a separator byte between parts.
pub fn stable_hash(parts: &[&str]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for part in parts {
        for b in part.bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// Seed for the random weights of one model in one cell. Depends only on
/// the model's own coordinates, so enabling or disabling other models never
/// changes it.
pub fn model_seed(base: u64, model: ModelKind, run: usize, fold: usize, noise: &NoiseLevel) -> u64 {
    base ^ stable_hash(&["model", model.name(), &run.to_string(), &fold.to_string(), &noise.to_string()])
}

/// Seed for shuffling rows in a run. Shared by all models and noise levels.
pub fn split_seed(base: u64, run: usize) -> u64 {
    base ^ stable_hash(&["split", &run.to_string()])
}

/// Seed for the noise draw of a cell. Shared by all models so they see the
/// same noisy data.
pub fn noise_seed(base: u64, run: usize, fold: usize, noise: &NoiseLevel) -> u64 {
    base ^ stable_hash(&["noise", &run.to_string(), &fold.to_string(), &noise.to_string()])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub raw: Vec<RawRecord>,
    pub summary: Vec<SummaryRow>,
    pub improvement: Vec<ImprovementRow>,
    /// Only for prediction tasks: run 0, fold 0, test partition, original
    /// units.
    pub predictions: Vec<PredictionRow>,
}

impl ExperimentOutput {
    /// Writes every table to `dir`. All files are rendered before any is
    /// written.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let raw = raw_csv(&self.raw)?;
        let summary = summary_csv(&self.summary)?;
        let improvement = improvement_csv(&self.improvement)?;
        let predictions = if self.predictions.is_empty() {
            None
        } else {
            Some(predictions_csv(&self.predictions)?)
        };
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_file(dir, RAW_FILE, &raw)?;
        write_file(dir, SUMMARY_FILE, &summary)?;
        write_file(dir, IMPROVEMENT_FILE, &improvement)?;
        if let Some(p) = predictions {
            write_file(dir, PREDICTIONS_FILE, &p)?;
        }
        Ok(())
    }
}

fn data_error(cfg: &ExperimentConfig, message: impl Into<String>) -> CliError {
    CliError::Data {
        path: cfg.data_path(),
        message: message.into(),
    }
}

fn select_columns(table: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(table.rows(), cols.len(), |i, j| table.get(i, cols[j]))
}

/// Reads the configured file and builds the supervised dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let path = cfg.data_path();
    if !path.is_file() {
        return Err(data_error(cfg, "file not found (see data/README.md for how to obtain it)"));
    }
    let d = &cfg.dataset;
    let table = read_table(&path, d.header)?;
    let width = table.cols();
    let check = |cols: &[usize]| -> Result<()> {
        match cols.iter().find(|c| **c >= width) {
            Some(c) => Err(data_error(cfg, format!("column {c} does not exist; the table has {width} columns"))),
            None => Ok(()),
        }
    };
    match &d.columns {
        Columns::Direct { inputs, targets } => {
            check(inputs)?;
            check(targets)?;
            let mut target_matrix = select_columns(&table, targets);
            if let Some(labels) = &d.class_labels {
                let mut codes = Vec::with_capacity(target_matrix.rows());
                for (i, v) in target_matrix.as_slice().iter().enumerate() {
                    let code = labels.iter().position(|l| l == v).ok_or_else(|| {
                        data_error(cfg, format!("row {}: class value {v} is not in class_labels", i + 1))
                    })?;
                    codes.push(code as f64);
                }
                target_matrix = Matrix::from_row_major(codes.len(), 1, codes)?;
            }
            let inputs = select_columns(&table, inputs);
            Ok(Dataset::new(d.name.clone(), inputs, target_matrix, d.task)?)
        }
        Columns::Lagged { lags, target } => {
            let cols: Vec<usize> = lags.iter().map(|l| l.column).chain([*target]).collect();
            check(&cols)?;
            Ok(lag_embed(&d.name, &table, lags, *target)?)
        }
    }
}

/// Train/test row layout for one run, checked against the data size.
#[derive(Debug, Clone)]
enum Layout {
    Holdout { n_train: usize, windows: Vec<Range<usize>> },
    KFold { folds: usize },
}

fn plan_layout(cfg: &ExperimentConfig, m: usize) -> Result<Layout> {
    match &cfg.protocol.split {
        SplitMode::Holdout { train, test_windows, .. } => {
            let n_train = match *train {
                TrainSize::Rows(n) => n,
                TrainSize::Fraction(f) => (f * m as f64).round() as usize,
            };
            if n_train == 0 || n_train >= m {
                return Err(data_error(
                    cfg,
                    format!("{n_train} training rows out of {m} leaves an empty partition"),
                ));
            }
            let n_test = m - n_train;
            let windows = if test_windows.is_empty() {
                std::iter::once(0..n_test).collect()
            } else {
                let total: usize = test_windows.iter().sum();
                if total != n_test {
                    return Err(data_error(
                        cfg,
                        format!("test_windows sum to {total} but the test partition has {n_test} rows"),
                    ));
                }
                let mut start = 0;
                test_windows
                    .iter()
                    .map(|w| {
                        let r = start..start + w;
                        start += w;
                        r
                    })
                    .collect()
            };
            Ok(Layout::Holdout { n_train, windows })
        }
        SplitMode::KFold { folds } => {
            if *folds > m {
                return Err(data_error(cfg, format!("{folds} folds exceed the {m} available rows")));
            }
            Ok(Layout::KFold { folds: *folds })
        }
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    data: &'a Dataset,
    layout: &'a Layout,
    settings: &'a [ModelSettings],
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    model: usize,
    noise: usize,
    run: usize,
    fold: usize,
}

struct CellResult {
    records: Vec<RawRecord>,
    predictions: Vec<PredictionRow>,
}

fn split_for(ctx: &Context<'_>, run: usize, fold: usize) -> Result<(Dataset, Dataset, Vec<usize>)> {
    let ds = ctx.data;
    let seed = split_seed(ctx.cfg.protocol.seed, run);
    match ctx.layout {
        Layout::Holdout { n_train, .. } => {
            let shuffle = matches!(ctx.cfg.protocol.split, SplitMode::Holdout { shuffle: true, .. });
            let (train, test) = split_holdout_rows(ds, *n_train, shuffle, seed)?;
            // Row indices are only reported for time series, which are
            // never shuffled.
            let test_rows = (*n_train..ds.len()).collect();
            Ok((train, test, test_rows))
        }
        Layout::KFold { folds } => {
            let sets = kfold_indices(ds.len(), *folds, !ds.task.is_temporal(), seed)?;
            let test_idx = &sets[fold];
            let mut in_test = vec![false; ds.len()];
            for &i in test_idx {
                in_test[i] = true;
            }
            let train_idx: Vec<usize> = (0..ds.len()).filter(|i| !in_test[*i]).collect();
            Ok((ds.select(&train_idx)?, ds.select(test_idx)?, test_idx.clone()))
        }
    }
}

fn score(metric: MetricKind, task: TaskKind, pred: &[f64], target: &[f64]) -> Result<f64> {
    Ok(match (metric, task) {
        (MetricKind::Ca, TaskKind::Classification { num_classes }) => {
            classification_accuracy(pred, target, num_classes)?
        }
        (MetricKind::Ca, _) => {
            return Err(CliError::Report("CA needs a classification task".into()));
        }
        (MetricKind::Mse, _) => mse(pred, target)?,
        (MetricKind::Rmse, _) => rmse(pred, target)?,
    })
}

fn rows_slice(m: &Matrix, rows: &Range<usize>) -> Vec<f64> {
    m.as_slice()[rows.start * m.cols()..rows.end * m.cols()].to_vec()
}

fn run_cell(ctx: &Context<'_>, cell: Cell) -> Result<CellResult> {
    let cfg = ctx.cfg;
    let settings = &ctx.settings[cell.model];
    let noise = &cfg.protocol.noise[cell.noise];
    let base = cfg.protocol.seed;

    let (train_raw, test_raw, test_rows) = split_for(ctx, cell.run, cell.fold)?;
    let stats = NormStats::fit(&train_raw, cfg.dataset.normalize);
    let mut train_ds = stats.apply(&train_raw)?;
    let mut test_ds = stats.apply(&test_raw)?;
    if let NoiseLevel::SnrDb(db) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(base, cell.run, cell.fold, noise));
        (train_ds, test_ds) = NoiseSpec::new(*db, cfg.protocol.noise_apply)?.apply(&train_ds, &test_ds, &mut rng)?;
    }

    let seed = model_seed(base, settings.kind, cell.run, cell.fold, noise);
    let model_cfg = ModelConfig {
        input_dim: train_ds.input_dim(),
        hidden_dim: settings.hidden,
        output_dim: train_ds.output_dim(),
        activation: settings.kind.activation(),
        recurrent: settings.kind.recurrent(),
        beta_ranges: settings.beta_ranges,
        rec_connectivity: settings.rec_connectivity,
        rec_spectral_radius: settings.rec_spectral_radius,
        input_weight_scale: settings.input_weight_scale,
        seed,
    };
    let task = train_ds.task;
    let metric = cfg.protocol.metric;
    let (model, _) = train(model_cfg, &train_ds.inputs, &train_ds.targets, task)?;
    let train_out = model.predict(&train_ds.inputs)?;
    let test_out = model.predict(&test_ds.inputs)?;

    let record = |partition: String, value: f64| RawRecord {
        dataset: cfg.dataset.name.clone(),
        model: settings.kind,
        noise: noise.to_string(),
        run: cell.run,
        fold: cell.fold,
        partition,
        metric,
        value,
        seed,
    };
    let mut records = vec![record(
        "train".into(),
        score(metric, task, train_out.as_slice(), train_ds.targets.as_slice())?,
    )];
    match ctx.layout {
        Layout::Holdout { windows, .. } if windows.len() > 1 => {
            for (w, rows) in windows.iter().enumerate() {
                let value = score(
                    metric,
                    task,
                    &rows_slice(&test_out, rows),
                    &rows_slice(&test_ds.targets, rows),
                )?;
                records.push(record(format!("test{}", w + 1), value));
            }
        }
        _ => records.push(record(
            "test".into(),
            score(metric, task, test_out.as_slice(), test_ds.targets.as_slice())?,
        )),
    }

    let mut predictions = Vec::new();
    if task == TaskKind::Prediction && cell.run == 0 && cell.fold == 0 {
        let as_outputs = Dataset {
            targets: test_out,
            ..test_ds.clone()
        };
        let original = stats.invert(&as_outputs)?;
        for (k, row) in test_rows.iter().enumerate() {
            predictions.push(PredictionRow {
                dataset: cfg.dataset.name.clone(),
                model: settings.kind,
                noise: noise.to_string(),
                index: *row,
                target: test_raw.targets.get(k, 0),
                prediction: original.targets.get(k, 0),
            });
        }
    }
    debug!(
        "{} noise={} run={} fold={} done",
        settings.kind, noise, cell.run, cell.fold
    );
    Ok(CellResult { records, predictions })
}

/// Loads the data and runs every cell. Nothing is written; a failure in
/// any cell fails the whole experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.revalidate()?;
    let data = load_dataset(cfg)?;
    let layout = plan_layout(cfg, data.len())?;
    let settings = cfg.all_model_settings();
    let folds = match layout {
        Layout::KFold { folds } => folds,
        Layout::Holdout { .. } => 1,
    };
    let mut cells = Vec::new();
    for model in 0..settings.len() {
        for noise in 0..cfg.protocol.noise.len() {
            for run in 0..cfg.protocol.runs {
                for fold in 0..folds {
                    cells.push(Cell { model, noise, run, fold });
                }
            }
        }
    }
    info!(
        "{}: {} rows, {} inputs, {} cells",
        cfg.dataset.name,
        data.len(),
        data.input_dim(),
        cells.len()
    );
    let ctx = Context {
        cfg,
        data: &data,
        layout: &layout,
        settings: &settings,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.protocol.workers)
        .build()
        .map_err(|e| CliError::Report(format!("cannot start worker pool: {e}")))?;
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(&ctx, *c))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut raw = Vec::new();
    let mut predictions = Vec::new();
    for r in results {
        raw.extend(r.records);
        predictions.extend(r.predictions);
    }
    let summary = summarize(&raw)?;
    let improvement = improvements(&summary);
    Ok(ExperimentOutput {
        raw,
        summary,
        improvement,
        predictions,
    })
}
