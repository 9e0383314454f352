//! Network construction and forward evaluation.
//!
//! Four variants share one representation: feed-forward or recurrent
//! hidden layer, with `tanh` or beta hidden units. Input and recurrent
//! weights are drawn once at construction and never trained; only the
//! linear readout is solved (see [`crate::training`]).
//!
//! Beta units combine their inputs multiplicatively: every weighted scalar
//! input goes through its own kernel and the unit's activation is the
//! product of those kernels. In the recurrent variant the previous hidden
//! state contributes one extra factor per recurrent connection. Recurrent
//! entries that are exactly zero are absent connections and contribute no
//! factor.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beta::{sample_beta_params, BetaParams, BetaRanges};
use crate::error::{Error, Result};
use crate::numerics::{scale_to_spectral_radius, Matrix};

/// Attempts at drawing a recurrent matrix with a non-zero spectral radius.
pub const MAX_RECURRENT_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Beta,
}

/// The four network variants compared by the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "tanh-elm")]
    TanhElm,
    #[serde(rename = "rec-tanh-elm")]
    RecTanhElm,
    #[serde(rename = "elm-bbfnn")]
    ElmBbfnn,
    #[serde(rename = "rec-elm-bbfnn")]
    RecElmBbfnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::TanhElm,
        ModelKind::RecTanhElm,
        ModelKind::ElmBbfnn,
        ModelKind::RecElmBbfnn,
    ];

    pub fn activation(self) -> Activation {
        match self {
            ModelKind::TanhElm | ModelKind::RecTanhElm => Activation::Tanh,
            ModelKind::ElmBbfnn | ModelKind::RecElmBbfnn => Activation::Beta,
        }
    }

    pub fn recurrent(self) -> bool {
        matches!(self, ModelKind::RecTanhElm | ModelKind::RecElmBbfnn)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TanhElm => "tanh-elm",
            ModelKind::RecTanhElm => "rec-tanh-elm",
            ModelKind::ElmBbfnn => "elm-bbfnn",
            ModelKind::RecElmBbfnn => "rec-elm-bbfnn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown model `{s}` (expected one of tanh-elm, rec-tanh-elm, elm-bbfnn, rec-elm-bbfnn)"
                ))
            })
    }
}

/// Architecture and initialization settings for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub recurrent: bool,
    /// Required for beta activation. Used for both input and recurrent
    /// kernels.
    pub beta_ranges: Option<BetaRanges>,
    /// Share of non-zero recurrent weights, in `(0, 1]`.
    pub rec_connectivity: f64,
    /// Target spectral radius of the recurrent matrix, in `(0, 1)`.
    pub rec_spectral_radius: f64,
    /// Input weights are uniform on `(-scale, scale)`.
    pub input_weight_scale: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub const DEFAULT_CONNECTIVITY: f64 = 0.1;
    pub const DEFAULT_SPECTRAL_RADIUS: f64 = 0.9;

    /// A config for one of the four variants with default recurrent and
    /// input-weight settings.
    pub fn for_kind(
        kind: ModelKind,
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        beta_ranges: Option<BetaRanges>,
        seed: u64,
    ) -> Self {
        Self {
            input_dim,
            hidden_dim,
            output_dim,
            activation: kind.activation(),
            recurrent: kind.recurrent(),
            beta_ranges,
            rec_connectivity: Self::DEFAULT_CONNECTIVITY,
            rec_spectral_radius: Self::DEFAULT_SPECTRAL_RADIUS,
            input_weight_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid(format!(
                "layer sizes must be positive (K={}, N={}, L={})",
                self.input_dim, self.hidden_dim, self.output_dim
            )));
        }
        if !(self.rec_spectral_radius > 0.0 && self.rec_spectral_radius < 1.0) {
            return Err(Error::invalid(format!(
                "rec_spectral_radius must lie in (0, 1), got {}",
                self.rec_spectral_radius
            )));
        }
        if !(self.rec_connectivity > 0.0 && self.rec_connectivity <= 1.0) {
            return Err(Error::invalid(format!(
                "rec_connectivity must lie in (0, 1], got {}",
                self.rec_connectivity
            )));
        }
        if !(self.input_weight_scale > 0.0 && self.input_weight_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "input_weight_scale must be positive, got {}",
                self.input_weight_scale
            )));
        }
        match (self.activation, &self.beta_ranges) {
            (Activation::Beta, None) => {
                Err(Error::invalid("beta activation requires beta_ranges"))
            }
            (Activation::Beta, Some(r)) => r.validate(),
            (Activation::Tanh, _) => Ok(()),
        }
    }
}

/// A row-major grid of beta kernels, one per (hidden neuron, source) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBank {
    rows: usize,
    cols: usize,
    params: Vec<BetaParams>,
}

impl BetaBank {
    pub fn from_params(rows: usize, cols: usize, params: Vec<BetaParams>) -> Result<Self> {
        if params.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: params.len(),
                context: "beta bank size",
            });
        }
        Ok(Self { rows, cols, params })
    }

    pub fn filled(rows: usize, cols: usize, params: BetaParams) -> Self {
        Self {
            rows,
            cols,
            params: vec![params; rows * cols],
        }
    }

    fn sample(rows: usize, cols: usize, ranges: &BetaRanges, rng: &mut ChaCha8Rng) -> Result<Self> {
        let params = (0..rows * cols)
            .map(|_| sample_beta_params(ranges, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows, cols, params })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &BetaParams {
        &self.params[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BetaParams] {
        &self.params[i * self.cols..(i + 1) * self.cols]
    }
}

/// Hidden-layer activations at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState(Vec<f64>);

impl HiddenState {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// The frozen random part of a network: everything except the readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UntrainedModel {
    config: ModelConfig,
    w_in: Matrix,
    w_rec: Option<Matrix>,
    input_beta: Option<BetaBank>,
    rec_beta: Option<BetaBank>,
}

impl UntrainedModel {
    /// Draws input weights, the sparse recurrent matrix and the beta
    /// banks from a generator seeded with `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (n, k) = (config.hidden_dim, config.input_dim);
        let scale = config.input_weight_scale;

        let w_in = Matrix::from_fn(n, k, |_, _| uniform_symmetric(&mut rng, scale));
        let w_rec = if config.recurrent {
            Some(sparse_recurrent(
                n,
                config.rec_connectivity,
                config.rec_spectral_radius,
                &mut rng,
            )?)
        } else {
            None
        };

        let (input_beta, rec_beta) = match config.activation {
            Activation::Beta => {
                let ranges = config
                    .beta_ranges
                    .as_ref()
                    .expect("validated: beta activation has ranges");
                let input = BetaBank::sample(n, k, ranges, &mut rng)?;
                let rec = if config.recurrent {
                    Some(BetaBank::sample(n, n, ranges, &mut rng)?)
                } else {
                    None
                };
                (Some(input), rec)
            }
            Activation::Tanh => (None, None),
        };

        Ok(Self {
            config,
            w_in,
            w_rec,
            input_beta,
            rec_beta,
        })
    }

    /// Assembles a model from explicit parts, checking every shape.
    pub fn from_parts(
        config: ModelConfig,
        w_in: Matrix,
        w_rec: Option<Matrix>,
        input_beta: Option<BetaBank>,
        rec_beta: Option<BetaBank>,
    ) -> Result<Self> {
        let model = Self {
            config,
            w_in,
            w_rec,
            input_beta,
            rec_beta,
        };
        model.check_consistency()?;
        Ok(model)
    }

    fn check_consistency(&self) -> Result<()> {
        let c = &self.config;
        c.validate()?;
        let (n, k) = (c.hidden_dim, c.input_dim);
        if self.w_in.shape() != (n, k) {
            return Err(Error::invalid(format!(
                "w_in is {:?}, expected ({n}, {k})",
                self.w_in.shape()
            )));
        }
        match (&self.w_rec, c.recurrent) {
            (Some(w), true) if w.shape() != (n, n) => {
                return Err(Error::invalid(format!(
                    "w_rec is {:?}, expected ({n}, {n})",
                    w.shape()
                )))
            }
            (None, true) => return Err(Error::invalid("recurrent model is missing w_rec")),
            (Some(_), false) => {
                return Err(Error::invalid("feed-forward model must not carry w_rec"))
            }
            _ => {}
        }
        let beta = c.activation == Activation::Beta;
        match (&self.input_beta, beta) {
            (Some(b), true) if b.shape() != (n, k) => {
                return Err(Error::invalid("input beta bank shape mismatch"))
            }
            (None, true) => return Err(Error::invalid("beta model is missing input kernels")),
            (Some(_), false) => return Err(Error::invalid("tanh model must not carry kernels")),
            _ => {}
        }
        match (&self.rec_beta, beta && c.recurrent) {
            (Some(b), true) if b.shape() != (n, n) => {
                return Err(Error::invalid("recurrent beta bank shape mismatch"))
            }
            (None, true) => {
                return Err(Error::invalid("recurrent beta model is missing recurrent kernels"))
            }
            (Some(_), false) => return Err(Error::invalid("unexpected recurrent kernels")),
            _ => {}
        }
        Ok(())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn w_in(&self) -> &Matrix {
        &self.w_in
    }

    pub fn w_rec(&self) -> Option<&Matrix> {
        self.w_rec.as_ref()
    }

    pub fn input_beta(&self) -> Option<&BetaBank> {
        self.input_beta.as_ref()
    }

    pub fn rec_beta(&self) -> Option<&BetaBank> {
        self.rec_beta.as_ref()
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    pub fn is_recurrent(&self) -> bool {
        self.config.recurrent
    }

    pub fn initial_state(&self) -> HiddenState {
        HiddenState::zeros(self.config.hidden_dim)
    }

    fn check_input(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                got: u.len(),
                context: "input vector",
            });
        }
        Ok(())
    }

    /// Stateless hidden mapping.
    pub fn hidden_ff(&self, u: &[f64]) -> Result<HiddenState> {
        self.check_input(u)?;
        let n = self.config.hidden_dim;
        let x = (0..n).map(|j| self.input_drive(j, u)).collect();
        Ok(HiddenState(x))
    }

    /// One recurrent update from `prev`.
    pub fn hidden_rec(&self, u: &[f64], prev: &HiddenState) -> Result<HiddenState> {
        let w_rec = self.w_rec.as_ref().ok_or_else(|| {
            Error::Contract("hidden_rec called on a feed-forward model".into())
        })?;
        self.check_input(u)?;
        if prev.len() != self.config.hidden_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.hidden_dim,
                got: prev.len(),
                context: "previous hidden state",
            });
        }
        let n = self.config.hidden_dim;
        let x_prev = prev.as_slice();
        let x = match self.config.activation {
            Activation::Tanh => (0..n)
                .map(|j| {
                    let input: f64 = self.w_in.row(j).iter().zip(u).map(|(w, v)| w * v).sum();
                    let rec: f64 = w_rec.row(j).iter().zip(x_prev).map(|(w, v)| w * v).sum();
                    (input + rec).tanh()
                })
                .collect(),
            Activation::Beta => {
                let kernels = self.rec_beta.as_ref().expect("checked at construction");
                (0..n)
                    .map(|j| {
                        let input = self.input_drive(j, u);
                        if input == 0.0 {
                            return 0.0;
                        }
                        let mut acc = input;
                        for ((w, x), b) in w_rec.row(j).iter().zip(x_prev).zip(kernels.row(j)) {
                            if *w == 0.0 {
                                continue;
                            }
                            acc *= b.eval(w * x);
                            if acc == 0.0 {
                                break;
                            }
                        }
                        acc
                    })
                    .collect()
            }
        };
        Ok(HiddenState(x))
    }

    /// Advances the hidden layer by one sample, dispatching on recurrence.
    pub fn step(&self, u: &[f64], prev: &HiddenState) -> Result<HiddenState> {
        if self.config.recurrent {
            self.hidden_rec(u, prev)
        } else {
            self.hidden_ff(u)
        }
    }

    // Feed-forward activation of neuron j.
    fn input_drive(&self, j: usize, u: &[f64]) -> f64 {
        let w = self.w_in.row(j);
        match self.config.activation {
            Activation::Tanh => w.iter().zip(u).map(|(w, v)| w * v).sum::<f64>().tanh(),
            Activation::Beta => {
                let kernels = self.input_beta.as_ref().expect("checked at construction");
                let mut acc = 1.0;
                for ((w, v), b) in w.iter().zip(u).zip(kernels.row(j)) {
                    acc *= b.eval(w * v);
                    if acc == 0.0 {
                        break;
                    }
                }
                acc
            }
        }
    }
}

fn uniform_symmetric<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    scale * (2.0 * rng.random::<f64>() - 1.0)
}

/// Sparse `n x n` matrix with `round(connectivity * n^2)` non-zeros (at
/// least one) at uniformly chosen positions, values uniform on `(-1, 1)`,
/// rescaled to the target spectral radius. Redraws when the sparsity
/// pattern leaves a nilpotent matrix.
fn sparse_recurrent(
    n: usize,
    connectivity: f64,
    target_radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Matrix> {
    let cells = n * n;
    let nonzeros = ((connectivity * cells as f64).round() as usize).clamp(1, cells);
    let mut last_err = None;
    for _ in 0..MAX_RECURRENT_DRAWS {
        let mut data = vec![0.0; cells];
        for pos in sample(rng, cells, nonzeros).into_iter() {
            let mut v = 0.0;
            while v == 0.0 {
                v = uniform_symmetric(rng, 1.0);
            }
            data[pos] = v;
        }
        let raw = Matrix::from_row_major(n, n, data)?;
        match scale_to_spectral_radius(&raw, target_radius) {
            Ok(scaled) => return Ok(scaled),
            Err(e @ Error::DegenerateMatrix(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::DegenerateMatrix("no recurrent draw succeeded".into())))
}

/// A network with a solved linear readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    reservoir: UntrainedModel,
    /// `N x L`; outputs are `w_out^T x`.
    w_out: Matrix,
}

const MODEL_FORMAT: &str = "bbfnn-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn new(reservoir: UntrainedModel, w_out: Matrix) -> Result<Self> {
        let expected = (reservoir.config.hidden_dim, reservoir.config.output_dim);
        if w_out.shape() != expected {
            return Err(Error::invalid(format!(
                "w_out is {:?}, expected {expected:?}",
                w_out.shape()
            )));
        }
        Ok(Self { reservoir, w_out })
    }

    pub fn reservoir(&self) -> &UntrainedModel {
        &self.reservoir
    }

    pub fn config(&self) -> &ModelConfig {
        &self.reservoir.config
    }

    pub fn w_out(&self) -> &Matrix {
        &self.w_out
    }

    /// Linear readout of one hidden state.
    pub fn readout(&self, x: &HiddenState) -> Vec<f64> {
        let l = self.w_out.cols();
        let mut y = vec![0.0; l];
        for (j, xj) in x.as_slice().iter().enumerate() {
            if *xj == 0.0 {
                continue;
            }
            for (o, w) in y.iter_mut().zip(self.w_out.row(j)) {
                *o += w * xj;
            }
        }
        y
    }

    /// Runs the network over `inputs` (one sample per row) in order,
    /// starting from `initial`. Returns the `M x L` outputs and the final
    /// state so a later call can continue the sequence.
    pub fn forward(&self, inputs: &Matrix, initial: &HiddenState) -> Result<(Matrix, HiddenState)> {
        if inputs.cols() != self.config().input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config().input_dim,
                got: inputs.cols(),
                context: "forward input width",
            });
        }
        if initial.len() != self.config().hidden_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config().hidden_dim,
                got: initial.len(),
                context: "initial hidden state",
            });
        }
        let mut state = initial.clone();
        let mut out = Vec::with_capacity(inputs.rows() * self.w_out.cols());
        for u in inputs.iter_rows() {
            state = self.reservoir.step(u, &state)?;
            out.extend(self.readout(&state));
        }
        Ok((Matrix::from_row_major(inputs.rows(), self.w_out.cols(), out)?, state))
    }

    /// Forward pass from the zero state.
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(self.forward(inputs, &self.reservoir.initial_state())?.0)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Serialization(format!(
                "unexpected format tag `{}`",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        let model = file.model;
        model.reservoir.check_consistency()?;
        TrainedModel::new(model.reservoir, model.w_out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::spectral_radius;

    fn ranges() -> BetaRanges {
        BetaRanges {
            p: (1.0, 3.0),
            q: (1.0, 3.0),
            u0: (-2.0, -0.5),
            u1: (0.5, 2.0),
        }
    }

    fn bell() -> BetaParams {
        BetaParams::new(2.0, 2.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn single_unit_tanh_shape() {
        let cfg = ModelConfig::for_kind(ModelKind::TanhElm, 1, 1, 1, None, 7);
        let m = UntrainedModel::init(cfg).unwrap();
        assert_eq!(m.w_in().shape(), (1, 1));
        assert!(m.w_in().get(0, 0).abs() < 1.0);
        assert!(m.w_rec().is_none());
        assert!(m.input_beta().is_none());
    }

    #[test]
    fn recurrent_matrix_density_and_radius() {
        let mut cfg = ModelConfig::for_kind(ModelKind::RecTanhElm, 2, 100, 1, None, 5);
        cfg.rec_connectivity = 0.1;
        let m = UntrainedModel::init(cfg).unwrap();
        let w = m.w_rec().unwrap();
        let nnz = w.count_nonzero();
        assert!((900..=1100).contains(&nnz), "nnz = {nnz}");
        assert!((spectral_radius(w).unwrap() - 0.9).abs() < 1e-6);
    }

    #[test]
    fn beta_banks_follow_variant() {
        let ff = UntrainedModel::init(ModelConfig::for_kind(
            ModelKind::ElmBbfnn, 3, 4, 1, Some(ranges()), 1,
        ))
        .unwrap();
        assert_eq!(ff.input_beta().unwrap().shape(), (4, 3));
        assert!(ff.rec_beta().is_none());
        let rec = UntrainedModel::init(ModelConfig::for_kind(
            ModelKind::RecElmBbfnn, 3, 4, 1, Some(ranges()), 1,
        ))
        .unwrap();
        assert_eq!(rec.rec_beta().unwrap().shape(), (4, 4));
    }

    #[test]
    fn beta_without_ranges_rejected() {
        let cfg = ModelConfig::for_kind(ModelKind::ElmBbfnn, 1, 1, 1, None, 0);
        assert!(UntrainedModel::init(cfg).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        let cfg = ModelConfig::for_kind(ModelKind::RecElmBbfnn, 2, 20, 1, Some(ranges()), 42);
        let a = UntrainedModel::init(cfg.clone()).unwrap();
        let b = UntrainedModel::init(cfg).unwrap();
        assert_eq!(a, b);
    }

    fn hand_beta_model(recurrent: bool, w_in: Vec<f64>, k: usize, kernel: BetaParams) -> UntrainedModel {
        let kind = if recurrent { ModelKind::RecElmBbfnn } else { ModelKind::ElmBbfnn };
        let cfg = ModelConfig::for_kind(kind, k, 1, 1, Some(ranges()), 0);
        let w_rec = recurrent.then(|| Matrix::from_row_major(1, 1, vec![0.5]).unwrap());
        let rec_beta = recurrent.then(|| BetaBank::filled(1, 1, kernel));
        UntrainedModel::from_parts(
            cfg,
            Matrix::from_row_major(1, k, w_in).unwrap(),
            w_rec,
            Some(BetaBank::filled(1, k, kernel)),
            rec_beta,
        )
        .unwrap()
    }

    #[test]
    fn hidden_ff_hand_product() {
        let m = hand_beta_model(false, vec![1.0, 1.0], 2, bell());
        let x = m.hidden_ff(&[0.25, 0.25]).unwrap();
        assert!((x.as_slice()[0] - 0.31640625).abs() < 1e-12);
        // below the support
        let x = m.hidden_ff(&[-0.5, 0.25]).unwrap();
        assert_eq!(x.as_slice()[0], 0.0);
    }

    #[test]
    fn constant_kernels_give_ones() {
        let m = hand_beta_model(true, vec![0.3, -0.8], 2, BetaParams::constant());
        assert_eq!(m.hidden_ff(&[9.0, -4.0]).unwrap().as_slice(), &[1.0]);
        let prev = HiddenState::from_vec(vec![0.7]);
        assert_eq!(m.hidden_rec(&[9.0, -4.0], &prev).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn zero_state_outside_recurrent_support_kills_unit() {
        // bell on (0, 1): w_rec * 0 = 0 is on the boundary, so the factor is 0
        let m = hand_beta_model(true, vec![1.0], 1, bell());
        let x = m.hidden_rec(&[0.5], &HiddenState::zeros(1)).unwrap();
        assert_eq!(x.as_slice(), &[0.0]);
    }

    #[test]
    fn tanh_zero_input_zero_state() {
        let m = UntrainedModel::init(ModelConfig::for_kind(ModelKind::TanhElm, 3, 5, 1, None, 2)).unwrap();
        let x = m.hidden_ff(&[0.0; 3]).unwrap();
        assert!(x.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hidden_rec_on_feed_forward_is_contract_error() {
        let m = UntrainedModel::init(ModelConfig::for_kind(ModelKind::TanhElm, 1, 2, 1, None, 2)).unwrap();
        let err = m.hidden_rec(&[0.0], &HiddenState::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn dimension_mismatch_reported() {
        let m = UntrainedModel::init(ModelConfig::for_kind(ModelKind::TanhElm, 3, 2, 1, None, 2)).unwrap();
        assert!(matches!(
            m.hidden_ff(&[0.0; 2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scalar_readout() {
        let cfg = ModelConfig::for_kind(ModelKind::ElmBbfnn, 1, 1, 1, Some(ranges()), 0);
        let res = UntrainedModel::from_parts(
            cfg,
            Matrix::from_row_major(1, 1, vec![1.0]).unwrap(),
            None,
            Some(BetaBank::filled(1, 1, bell())),
            None,
        )
        .unwrap();
        let model = TrainedModel::new(res, Matrix::from_row_major(1, 1, vec![2.0]).unwrap()).unwrap();
        assert_eq!(model.readout(&HiddenState::from_vec(vec![0.5])), vec![1.0]);
    }
}
