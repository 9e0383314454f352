//! Beta basis function neural networks trained as extreme learning
//! machines, in feed-forward and recurrent variants, with `tanh` baselines.
//!
//! The crate covers the numerical core ([`numerics`]), the beta kernel
//! ([`beta`]), network construction and evaluation ([`model`]), closed-form
//! training ([`training`]), the data protocol ([`data`]) and evaluation
//! metrics ([`metrics`]).
//!
//! ```
//! use bbfnn_core::{train, BetaRanges, Matrix, ModelConfig, ModelKind, TaskKind};
//!
//! let x = Matrix::from_fn(40, 1, |i, _| i as f64 / 40.0);
//! let y = x.map(|v| (3.0 * v).sin());
//! let ranges = BetaRanges { p: (1.0, 3.0), q: (1.0, 3.0), u0: (-2.0, 0.0), u1: (0.0, 2.0) };
//! let config = ModelConfig::for_kind(ModelKind::RecElmBbfnn, 1, 20, 1, Some(ranges), 7);
//! let (model, fit) = train(config, &x, &y, TaskKind::Prediction)?;
//! assert!(fit.value < 0.1);
//! let outputs = model.predict(&x)?;
//! assert_eq!(outputs.shape(), (40, 1));
//! # Ok::<(), bbfnn_core::Error>(())
//! ```

pub mod beta;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod training;

pub use beta::{beta_1d, beta_nd, sample_beta_params, BetaParams, BetaRanges};
pub use data::{
    inject_noise, kfold, kfold_indices, lag_embed, load_csv, normalize, read_table, split_holdout,
    split_holdout_rows,
    CsvSchema, Dataset, Fold, LagSpec, NoiseSpec, NoiseTarget, NormRange, NormStats, TaskKind,
};
pub use error::{Error, Result};
pub use metrics::{
    aggregate, classification_accuracy, improvement_rate, mean_std, mse, rmse, EvalReport,
    MetricKind, Partition, RunResult,
};
pub use model::{
    Activation, BetaBank, HiddenState, ModelConfig, ModelKind, TrainedModel, UntrainedModel,
};
pub use numerics::{pseudo_inverse, scale_to_spectral_radius, spectral_radius, Matrix};
pub use training::{assemble_hidden_matrix, solve_output_weights, train, HiddenMatrix, TrainFit};
