//! Feed-forward binary classifier: ReLU hidden layers, one sigmoid output,
//! class-weighted cross-entropy averaged per mini-batch, trained by SGD with
//! momentum.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{sigmoid, softplus};
use crate::matrix::Matrix;
use crate::resample::ClassWeights;
use crate::rng::derived_rng;

const INIT_STREAM: u64 = 0x1417;
const SHUFFLE_STREAM: u64 = 0x5AFE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpArchitecture {
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for MlpArchitecture {
    fn default() -> Self {
        MlpArchitecture {
            hidden_layers: vec![64],
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 50,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl MlpArchitecture {
    pub const MIN_UNITS: usize = 16;
    pub const MAX_UNITS: usize = 256;

    pub fn validate(&self, n_rows: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1..=3).contains(&self.hidden_layers.len()) {
            return bad(format!(
                "need 1 to 3 hidden layers, got {}",
                self.hidden_layers.len()
            ));
        }
        if let Some(u) = self
            .hidden_layers
            .iter()
            .find(|&&u| !(Self::MIN_UNITS..=Self::MAX_UNITS).contains(&u))
        {
            return bad(format!(
                "hidden layer size {u} outside [{}, {}]",
                Self::MIN_UNITS,
                Self::MAX_UNITS
            ));
        }
        if self.batch_size == 0 || self.batch_size > n_rows {
            return bad(format!(
                "batch_size {} must lie in [1, {n_rows}]",
                self.batch_size
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn forward(&self, input: &[f64], batch: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(batch * self.outputs);
        for b in 0..batch {
            let x = &input[b * self.inputs..(b + 1) * self.inputs];
            for o in 0..self.outputs {
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                out.push(self.bias[o] + w.iter().zip(x).map(|(p, q)| p * q).sum::<f64>());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    pub architecture: MlpArchitecture,
}

/// Per-layer `(d weights, d bias)`, same shapes as the model.
pub type Gradients = Vec<(Vec<f64>, Vec<f64>)>;

impl MlpModel {
    /// Weights uniform in `+-sqrt(6 / fan_in)`, zero biases.
    pub fn initialize(input_width: usize, architecture: MlpArchitecture) -> Self {
        let mut rng = derived_rng(architecture.seed, &[INIT_STREAM]);
        let mut widths = vec![input_width];
        widths.extend(&architecture.hidden_layers);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in.max(1) as f64).sqrt();
                DenseLayer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.random_range(-limit..=limit))
                        .collect(),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        MlpModel {
            layers,
            architecture,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    /// Pre-activations of every layer for a batch of flattened rows.
    fn forward_all(&self, input: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = input.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(&act, batch, &mut z);
            if li + 1 < self.layers.len() {
                act = z.iter().map(|&v| v.max(0.0)).collect();
            }
            pre.push(z);
        }
        pre
    }

    fn logits(&self, input: &[f64], batch: usize) -> Vec<f64> {
        self.forward_all(input, batch).pop().unwrap_or_default()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.input_width() {
            return Err(Error::WidthMismatch {
                expected: self.input_width(),
                found: x.n_cols(),
            });
        }
        const CHUNK: usize = 512;
        let mut out = Vec::with_capacity(x.n_rows());
        let data = x.as_slice();
        let w = x.n_cols();
        for start in (0..x.n_rows()).step_by(CHUNK) {
            let end = (start + CHUNK).min(x.n_rows());
            out.extend(
                self.logits(&data[start * w..end * w], end - start)
                    .into_iter()
                    .map(sigmoid),
            );
        }
        Ok(out)
    }

    /// Mean class-weighted cross-entropy over `rows` and its gradient.
    pub fn loss_and_gradient(
        &self,
        x: &Matrix,
        y: &[u8],
        rows: &[usize],
        weights: &ClassWeights,
    ) -> (f64, Gradients) {
        let batch = rows.len();
        let mut input = Vec::with_capacity(batch * x.n_cols());
        for &r in rows {
            input.extend_from_slice(x.row(r));
        }
        let pre = self.forward_all(&input, batch);
        let logits = pre.last().expect("output layer");
        let inv = 1.0 / batch as f64;
        let mut loss = 0.0;
        // d loss / d output pre-activation
        let mut delta: Vec<f64> = rows
            .iter()
            .zip(logits)
            .map(|(&r, &z)| {
                let w = weights.of(y[r]);
                loss += w * if y[r] == 1 { softplus(-z) } else { softplus(z) };
                w * (sigmoid(z) - f64::from(y[r])) * inv
            })
            .collect();
        loss *= inv;

        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.outputs]))
            .collect();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let activation: Vec<f64> = if li == 0 {
                input.clone()
            } else {
                pre[li - 1].iter().map(|&v| v.max(0.0)).collect()
            };
            let (gw, gb) = &mut grads[li];
            for b in 0..batch {
                let a = &activation[b * layer.inputs..(b + 1) * layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[b * layer.outputs + o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, v) in gw[o * layer.inputs..(o + 1) * layer.inputs]
                        .iter_mut()
                        .zip(a)
                    {
                        *g += d * v;
                    }
                }
            }
            if li > 0 {
                let prev_pre = &pre[li - 1];
                let mut next = vec![0.0; batch * layer.inputs];
                for b in 0..batch {
                    for o in 0..layer.outputs {
                        let d = delta[b * layer.outputs + o];
                        if d == 0.0 {
                            continue;
                        }
                        let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (n, wv) in next[b * layer.inputs..(b + 1) * layer.inputs]
                            .iter_mut()
                            .zip(w)
                        {
                            *n += d * wv;
                        }
                    }
                }
                for (n, &z) in next.iter_mut().zip(prev_pre) {
                    if z <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
        }
        (loss, grads)
    }

    /// All parameters flattened layer by layer (weights, then bias).
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("parameter count");
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.parameters().iter().all(|v| v.is_finite())
    }
}

pub fn flatten_gradients(g: &Gradients) -> Vec<f64> {
    g.iter()
        .flat_map(|(w, b)| w.iter().chain(b).copied())
        .collect()
}

pub fn train_mlp(
    x: &Matrix,
    y: &[u8],
    architecture: &MlpArchitecture,
    weights: Option<&ClassWeights>,
) -> Result<MlpModel> {
    train_mlp_traced(x, y, architecture, weights).map(|(m, _)| m)
}

/// Also returns the full-data training loss at initialization and after
/// every epoch.
pub fn train_mlp_traced(
    x: &Matrix,
    y: &[u8],
    architecture: &MlpArchitecture,
    weights: Option<&ClassWeights>,
) -> Result<(MlpModel, Vec<f64>)> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "feature rows vs labels",
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("features"));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    architecture.validate(x.n_rows())?;
    let weights = weights.copied().unwrap_or(ClassWeights::UNIT);
    let mut model = MlpModel::initialize(x.n_cols(), architecture.clone());
    let all: Vec<usize> = (0..x.n_rows()).collect();
    let full_loss = |m: &MlpModel| m.loss_and_gradient(x, y, &all, &weights).0;
    let mut history = vec![full_loss(&model)];
    let mut velocity: Vec<f64> = vec![0.0; model.parameters().len()];
    let mut order = all.clone();
    for epoch in 0..architecture.epochs {
        order.copy_from_slice(&all);
        order.shuffle(&mut derived_rng(
            architecture.seed,
            &[SHUFFLE_STREAM, epoch as u64],
        ));
        for batch in order.chunks(architecture.batch_size) {
            let (loss, grads) = model.loss_and_gradient(x, y, batch, &weights);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "MLP loss non-finite in epoch {epoch}"
                )));
            }
            let g = flatten_gradients(&grads);
            let mut params = model.parameters();
            for ((p, v), gi) in params.iter_mut().zip(velocity.iter_mut()).zip(&g) {
                *v = architecture.momentum * *v - architecture.learning_rate * gi;
                *p += *v;
            }
            model.set_parameters(&params);
        }
        let l = full_loss(&model);
        if !l.is_finite() || !model.all_finite() {
            return Err(Error::Diverged(format!(
                "MLP loss non-finite after epoch {epoch}"
            )));
        }
        history.push(l);
    }
    Ok((model, history))
}
