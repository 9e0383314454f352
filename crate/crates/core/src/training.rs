//! Single-pass ELM training: collect hidden states over the training set,
//! then solve the readout with a pseudo-inverse.

use log::warn;

use crate::data::TaskKind;
use crate::error::{Error, Result};
use crate::metrics::{classification_accuracy, rmse, MetricKind};
use crate::model::{ModelConfig, TrainedModel, UntrainedModel};
use crate::numerics::{pseudo_inverse, Matrix};

/// Share of all-zero rows above which [`assemble_hidden_matrix`] warns.
pub const DEAD_ROW_WARNING: f64 = 0.5;

/// Hidden states stacked as rows: `M x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenMatrix(Matrix);

impl HiddenMatrix {
    pub fn new(h: Matrix) -> Self {
        Self(h)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Fraction of samples whose hidden state is identically zero.
    pub fn zero_row_fraction(&self) -> f64 {
        let dead = self.0.iter_rows().filter(|r| r.iter().all(|v| *v == 0.0)).count();
        dead as f64 / self.0.rows() as f64
    }
}

/// Row `t` is the hidden state after presenting sample `t`. Recurrent
/// models chain states in row order from the zero state.
pub fn assemble_hidden_matrix(model: &UntrainedModel, inputs: &Matrix) -> Result<HiddenMatrix> {
    #[cfg(test)]
    crate::numerics::counters::ASSEMBLE.with(|c| c.set(c.get() + 1));

    let n = model.hidden_dim();
    let mut state = model.initial_state();
    let mut data = Vec::with_capacity(inputs.rows() * n);
    for u in inputs.iter_rows() {
        state = model.step(u, &state)?;
        data.extend_from_slice(state.as_slice());
    }
    let h = HiddenMatrix(Matrix::from_row_major(inputs.rows(), n, data)?);
    let dead = h.zero_row_fraction();
    if dead > DEAD_ROW_WARNING {
        warn!(
            "{:.0}% of hidden states are all zero; the beta kernels rarely cover the driven inputs",
            dead * 100.0
        );
    }
    Ok(h)
}

/// Minimum-norm least-squares readout `pinv(H) * Yd`, shape `N x L`.
pub fn solve_output_weights(h: &HiddenMatrix, targets: &Matrix) -> Result<Matrix> {
    if h.0.rows() != targets.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.0.rows(),
            got: targets.rows(),
            context: "target rows vs hidden matrix rows",
        });
    }
    pseudo_inverse(&h.0)?.matmul(targets)
}

/// Training-set fit reported alongside the trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainFit {
    pub metric: MetricKind,
    pub value: f64,
}

/// Accuracy for classification, RMSE otherwise, over all output columns.
pub fn fit_metric(task: TaskKind, outputs: &Matrix, targets: &Matrix) -> Result<TrainFit> {
    match task {
        TaskKind::Classification { num_classes } => Ok(TrainFit {
            metric: MetricKind::Ca,
            value: classification_accuracy(outputs.as_slice(), targets.as_slice(), num_classes)?,
        }),
        TaskKind::Prediction | TaskKind::Regression => Ok(TrainFit {
            metric: MetricKind::Rmse,
            value: rmse(outputs.as_slice(), targets.as_slice())?,
        }),
    }
}

/// Draws the random network, collects its hidden states on the training
/// inputs and solves the readout in closed form.
pub fn train(
    config: ModelConfig,
    inputs: &Matrix,
    targets: &Matrix,
    task: TaskKind,
) -> Result<(TrainedModel, TrainFit)> {
    if inputs.cols() != config.input_dim {
        return Err(Error::DimensionMismatch {
            expected: config.input_dim,
            got: inputs.cols(),
            context: "training input width",
        });
    }
    if targets.cols() != config.output_dim {
        return Err(Error::DimensionMismatch {
            expected: config.output_dim,
            got: targets.cols(),
            context: "training target width",
        });
    }
    let reservoir = UntrainedModel::init(config)?;
    let h = assemble_hidden_matrix(&reservoir, inputs)?;
    let w_out = solve_output_weights(&h, targets)?;
    let fitted = h.matrix().matmul(&w_out)?;
    let fit = fit_metric(task, &fitted, targets)?;
    Ok((TrainedModel::new(reservoir, w_out)?, fit))
}
