//! Fully connected denoiser with hand-written backpropagation.
//!
//! Input is the noisy encoded vector concatenated with a sinusoidal timestep
//! embedding; hidden layers use SiLU; the output layer is linear and has the
//! encoded width. Gaussian coordinates of the output are the predicted noise,
//! categorical blocks are logits over the clean category.

use rand::Rng;

use crate::encoding::{EncodedLayout, SegmentKind};
use crate::error::{Error, Result};

pub const EMBED_WIDTH: usize = 16;

/// `[sin(t f_0) .. sin(t f_{h-1}), cos(t f_0) .. cos(t f_{h-1})]` with
/// `f_i = 10000^(-i/h)`, `h = width / 2`.
pub fn timestep_embedding(t: usize, width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut out = vec![0.0; width];
    for i in 0..half {
        let freq = (-(10_000f64).ln() * i as f64 / half as f64).exp();
        let arg = t as f64 * freq;
        out[i] = arg.sin();
        out[half + i] = arg.cos();
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    weights: usize,
    biases: usize,
}

/// One training target: the noisy input at step `t`, the Gaussian noise that
/// produced it and the clean category of every categorical block.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub noisy: Vec<f64>,
    pub t: usize,
    /// Full encoded width; only Gaussian coordinates are read.
    pub noise: Vec<f64>,
    /// One entry per categorical segment, in layout order.
    pub categories: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Denoiser {
    dims: Vec<usize>,
    embed: usize,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

impl Denoiser {
    /// Zero-initialised network for `width` encoded coordinates.
    pub fn zeros(width: usize, hidden: &[usize]) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(width + EMBED_WIDTH);
        dims.extend_from_slice(hidden);
        dims.push(width);
        Self::from_dims(dims, EMBED_WIDTH, None).expect("consistent dims")
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(width: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(width, hidden);
        for layer in net.layers.clone() {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut net.params[layer.weights..layer.biases] {
                *w = rng.random_range(-limit..limit);
            }
        }
        net
    }

    pub(crate) fn from_dims(dims: Vec<usize>, embed: usize, params: Option<Vec<f64>>) -> Result<Self> {
        if dims.len() < 2 || dims[0] != dims[dims.len() - 1] + embed || dims.contains(&0) {
            return Err(Error::ModelFormat(format!("inconsistent layer sizes {dims:?}")));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        let mut offset = 0;
        for pair in dims.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            let weights = offset;
            let biases = weights + inputs * outputs;
            offset = biases + outputs;
            layers.push(LayerShape { inputs, outputs, weights, biases });
        }
        let params = match params {
            Some(p) if p.len() == offset => p,
            Some(p) => {
                return Err(Error::ModelFormat(format!(
                    "expected {offset} parameters, found {}",
                    p.len()
                )))
            }
            None => vec![0.0; offset],
        };
        Ok(Denoiser { dims, embed, layers, params })
    }

    /// Encoded width `W` (output width).
    pub fn width(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn embed_width(&self) -> usize {
        self.embed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(offset, length)` of every parameter tensor: weights then biases per layer.
    pub fn tensor_ranges(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .flat_map(|l| [(l.weights, l.inputs * l.outputs), (l.biases, l.outputs)])
            .collect()
    }

    fn input(&self, x: &[f64], t: usize) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.dims[0]);
        input.extend_from_slice(x);
        input.extend(timestep_embedding(t, self.embed));
        input
    }

    /// Forward pass keeping pre-activations and activations of every layer.
    fn forward_cached(&self, input: Vec<f64>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = Vec::with_capacity(self.layers.len() + 1);
        act.push(input);
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let a = &act[li];
            let w = &self.params[layer.weights..layer.biases];
            let b = &self.params[layer.biases..layer.biases + layer.outputs];
            let z: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                    b[o] + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>()
                })
                .collect();
            let next = if li == last { z.clone() } else { z.iter().map(|&v| silu(v)).collect() };
            pre.push(z);
            act.push(next);
        }
        (pre, act)
    }

    /// Deterministic forward pass.
    pub fn apply(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        if x.len() != self.width() {
            return Err(Error::WidthMismatch { expected: self.width(), actual: x.len() });
        }
        let (_, mut act) = self.forward_cached(self.input(x, t));
        Ok(act.pop().expect("output layer"))
    }

    /// Mean loss over `batch` and its gradient with respect to every parameter.
    ///
    /// Per example the loss is the mean squared noise error over Gaussian
    /// coordinates plus the mean cross-entropy over categorical blocks.
    pub fn loss_and_grad(&self, layout: &EncodedLayout, batch: &[Example]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        for ex in batch {
            let (pre, act) = self.forward_cached(self.input(&ex.noisy, ex.t));
            let (loss, mut delta) = output_loss(layout, act.last().unwrap(), ex);
            total += loss;
            for li in (0..self.layers.len()).rev() {
                let layer = self.layers[li];
                let a = &act[li];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[layer.weights + o * layer.inputs..layer.weights + (o + 1) * layer.inputs];
                    for (g, x) in row.iter_mut().zip(a) {
                        *g += d * x;
                    }
                    grad[layer.biases + o] += d;
                }
                if li == 0 {
                    break;
                }
                let w = &self.params[layer.weights..layer.biases];
                let mut prev = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                for (p, &z) in prev.iter_mut().zip(&pre[li - 1]) {
                    *p *= silu_grad(z);
                }
                delta = prev;
            }
        }
        let n = batch.len().max(1) as f64;
        for g in &mut grad {
            *g /= n;
        }
        (total / n, grad)
    }

    /// Mean loss over `batch` (forward passes only).
    pub fn loss(&self, layout: &EncodedLayout, batch: &[Example]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|ex| {
                let out = self.apply(&ex.noisy, ex.t).expect("width checked by caller");
                output_loss(layout, &out, ex).0
            })
            .sum();
        total / batch.len().max(1) as f64
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Loss of one example and its gradient with respect to the network output.
fn output_loss(layout: &EncodedLayout, out: &[f64], ex: &Example) -> (f64, Vec<f64>) {
    let gaussians = layout.gaussian_count();
    let blocks = layout.categorical_count();
    let mut loss = 0.0;
    let mut delta = vec![0.0; out.len()];
    let mut block = 0;
    for seg in layout.segments() {
        match seg.kind {
            SegmentKind::Gaussian => {
                let o = seg.offset;
                let diff = out[o] - ex.noise[o];
                loss += diff * diff / gaussians as f64;
                delta[o] = 2.0 * diff / gaussians as f64;
            }
            SegmentKind::Categorical(_) => {
                let range = seg.range();
                let target = ex.categories[block];
                block += 1;
                let logits = &out[range.clone()];
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let log_sum = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
                loss += (log_sum - logits[target]) / blocks as f64;
                for (k, p) in softmax(logits).into_iter().enumerate() {
                    let hot = (k == target) as u8 as f64;
                    delta[range.start + k] = (p - hot) / blocks as f64;
                }
            }
        }
    }
    (loss, delta)
}
