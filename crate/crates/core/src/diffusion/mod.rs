//! Mixed Gaussian / multinomial denoising diffusion over encoded rows.
//!
//! Gaussian coordinates follow the usual DDPM with an epsilon-predicting
//! network and fixed reverse variance `beta_t`. One-hot blocks follow
//! multinomial diffusion: the network predicts logits of the clean category
//! and the reverse step samples the posterior
//! `theta ∝ (alpha_t x_t + (1 - alpha_t)/K) * (alpha_bar_{t-1} p + (1 - alpha_bar_{t-1})/K)`.

mod forward;
mod network;
mod schedule;

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedLayout, SegmentKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub use forward::{categorical_forward, categorical_jump, forward_jump, forward_step};
pub use network::{timestep_embedding, Denoiser, Example, EMBED_WIDTH};
pub use schedule::NoiseSchedule;

use forward::{hot_index, sample_index};
use network::softmax;

/// Training hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Hidden layer widths; `None` means two layers of `max(64, 2W)`.
    pub hidden: Option<Vec<usize>>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            steps: 100,
            beta_start: 1e-3,
            beta_end: 0.2,
            hidden: None,
            epochs: 1000,
            batch_size: 64,
            learning_rate: 1e-3,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl DiffusionConfig {
    /// Linear schedule of the 1000-step reference (1e-4 .. 0.02) rescaled to
    /// `steps` so that the total noise injected is comparable.
    pub fn with_scaled_schedule(mut self, steps: usize) -> Self {
        let scale = 1000.0 / steps.max(1) as f64;
        self.steps = steps;
        self.beta_start = (1e-4 * scale).min(0.5);
        self.beta_end = (0.02 * scale).min(0.999);
        self
    }

    pub fn hidden_for(&self, width: usize) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| vec![64.max(2 * width); 2])
    }

    pub fn validate(&self) -> Result<()> {
        NoiseSchedule::linear(self.steps, self.beta_start, self.beta_end)?;
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("lr", "must be a positive number"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("momentum", "must lie in [0, 1)"));
        }
        if let Some(h) = &self.hidden {
            if h.contains(&0) {
                return Err(Error::param("hidden", "layer widths must be positive"));
            }
        }
        Ok(())
    }
}

/// A trained denoiser bound to its schedule and encoded layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionModel {
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    layout: EncodedLayout,
    loss_trace: Vec<f64>,
}

/// Draw a training example for one clean row.
fn make_example<R: Rng + ?Sized>(
    x0: &[f64],
    layout: &EncodedLayout,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Example {
    let t = rng.random_range(1..=schedule.steps());
    let ab = schedule.alpha_bar(t);
    let mut noisy = vec![0.0; x0.len()];
    let mut noise = vec![0.0; x0.len()];
    let mut categories = Vec::with_capacity(layout.categorical_count());
    for seg in layout.segments() {
        match seg.kind {
            SegmentKind::Gaussian => {
                let e: f64 = rng.sample(StandardNormal);
                noise[seg.offset] = e;
                noisy[seg.offset] = ab.sqrt() * x0[seg.offset] + (1.0 - ab).sqrt() * e;
            }
            SegmentKind::Categorical(k) => {
                let hot = hot_index(&x0[seg.range()]).expect("validated one-hot");
                let probs: Vec<f64> = (0..k)
                    .map(|i| ab * (i == hot) as u8 as f64 + (1.0 - ab) / k as f64)
                    .collect();
                noisy[seg.offset + sample_index(&probs, rng)] = 1.0;
                categories.push(hot);
            }
        }
    }
    Example { noisy, t, noise, categories }
}

/// Fit a diffusion model to encoded rows.
pub fn train(rows: &Matrix, layout: &EncodedLayout, config: &DiffusionConfig) -> Result<DiffusionModel> {
    config.validate()?;
    if rows.rows() < 2 {
        return Err(Error::param("rows", format!("need at least 2 training rows, got {}", rows.rows())));
    }
    if layout.width() == 0 {
        return Err(Error::param("rows", "encoded width is zero"));
    }
    if rows.cols() != layout.width() {
        return Err(Error::WidthMismatch { expected: layout.width(), actual: rows.cols() });
    }
    for r in rows.iter_rows() {
        for seg in layout.segments() {
            match seg.kind {
                SegmentKind::Gaussian if !r[seg.offset].is_finite() => {
                    return Err(Error::Schema("non-finite training value".into()))
                }
                SegmentKind::Categorical(_) => {
                    hot_index(&r[seg.range()])?;
                }
                _ => {}
            }
        }
    }

    let schedule = NoiseSchedule::linear(config.steps, config.beta_start, config.beta_end)?;
    let hidden = config.hidden_for(layout.width());
    let mut denoiser = Denoiser::new(layout.width(), &hidden, &mut seed::rng(config.seed, seed::stream::INIT));
    let mut velocity = vec![0.0; denoiser.params().len()];
    let mut rng = seed::rng(config.seed, seed::stream::TRAIN);
    let mut order: Vec<usize> = (0..rows.rows()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let examples: Vec<Example> = batch
                .iter()
                .map(|&i| make_example(rows.row(i), layout, &schedule, &mut rng))
                .collect();
            let (loss, grad) = denoiser.loss_and_grad(layout, &examples);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch: epoch + 1, loss });
            }
            epoch_loss += loss * batch.len() as f64;
            for ((p, v), g) in denoiser.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g;
                *p += *v;
            }
        }
        let mean = epoch_loss / rows.rows() as f64;
        if !mean.is_finite() || denoiser.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch: epoch + 1, loss: mean });
        }
        trace.push(mean);
    }

    Ok(DiffusionModel { schedule, denoiser, layout: layout.clone(), loss_trace: trace })
}

impl DiffusionModel {
    /// A model with random weights and an empty loss trace; sampling refuses it.
    pub fn untrained(layout: &EncodedLayout, config: &DiffusionConfig) -> Result<Self> {
        config.validate()?;
        let schedule = NoiseSchedule::linear(config.steps, config.beta_start, config.beta_end)?;
        let denoiser = Denoiser::new(
            layout.width(),
            &config.hidden_for(layout.width()),
            &mut seed::rng(config.seed, seed::stream::INIT),
        );
        Ok(DiffusionModel { schedule, denoiser, layout: layout.clone(), loss_trace: Vec::new() })
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn denoiser(&self) -> &Denoiser {
        &self.denoiser
    }

    pub fn layout(&self) -> &EncodedLayout {
        &self.layout
    }

    /// Mean training loss of every epoch.
    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    /// `n` encoded samples. Instance `i` uses its own seed derived from
    /// `(seed, i)`, so results do not depend on how requests are batched.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Matrix> {
        Ok(self.sample_scored(0, n, seed)?.0)
    }

    /// Samples `first..first + n` together with the final-step category
    /// probabilities of every block (zero on Gaussian coordinates).
    pub fn sample_scored(&self, first: usize, n: usize, seed: u64) -> Result<(Matrix, Matrix)> {
        if self.loss_trace.is_empty() {
            return Err(Error::Untrained);
        }
        let w = self.layout.width();
        let mut values = Matrix::zeros(0, w);
        let mut scores = Matrix::zeros(0, w);
        let base = seed::derive(seed, seed::stream::SAMPLE);
        for i in first..first + n {
            let (v, s) = self.sample_one(&mut seed::rng(base, i as u64))?;
            values.push_row(&v);
            scores.push_row(&s);
        }
        Ok((values, scores))
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
        let w = self.layout.width();
        let mut x = vec![0.0; w];
        let mut scores = vec![0.0; w];
        for seg in self.layout.segments() {
            match seg.kind {
                SegmentKind::Gaussian => x[seg.offset] = rng.sample(StandardNormal),
                SegmentKind::Categorical(k) => x[seg.offset + rng.random_range(0..k)] = 1.0,
            }
        }
        for t in (1..=self.schedule.steps()).rev() {
            let out = self.denoiser.apply(&x, t)?;
            let beta = self.schedule.beta(t);
            let alpha = self.schedule.alpha(t);
            let ab = self.schedule.alpha_bar(t);
            let ab_prev = self.schedule.alpha_bar(t - 1);
            for seg in self.layout.segments() {
                match seg.kind {
                    SegmentKind::Gaussian => {
                        let o = seg.offset;
                        let mean = (x[o] - beta / (1.0 - ab).sqrt() * out[o]) / alpha.sqrt();
                        let z: f64 = if t > 1 { rng.sample(StandardNormal) } else { 0.0 };
                        x[o] = mean + beta.sqrt() * z;
                    }
                    SegmentKind::Categorical(k) => {
                        let range = seg.range();
                        let current = hot_index(&x[range.clone()])?;
                        let p0 = softmax(&out[range.clone()]);
                        let mut theta: Vec<f64> = (0..k)
                            .map(|c| {
                                let from_xt = alpha * (c == current) as u8 as f64 + (1.0 - alpha) / k as f64;
                                let from_x0 = ab_prev * p0[c] + (1.0 - ab_prev) / k as f64;
                                from_xt * from_x0
                            })
                            .collect();
                        let sum: f64 = theta.iter().sum();
                        theta.iter_mut().for_each(|p| *p /= sum);
                        let next = sample_index(&theta, rng);
                        for (c, cell) in x[range.clone()].iter_mut().enumerate() {
                            *cell = (c == next) as u8 as f64;
                        }
                        scores[range].copy_from_slice(&theta);
                    }
                }
            }
        }
        Ok((x, scores))
    }

    const MAGIC: &'static [u8; 8] = b"MLDMDIFF";
    const VERSION: u32 = 1;

    /// Versioned little-endian container: schedule, layout, layer sizes,
    /// parameters and loss trace, tagged with the layout fingerprint.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        out.extend_from_slice(&self.layout.fingerprint().to_le_bytes());
        let put_u32 = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        let put_f64s = |out: &mut Vec<u8>, vs: &[f64]| {
            for v in vs {
                out.extend_from_slice(&v.to_le_bytes());
            }
        };
        put_u32(&mut out, self.layout.segments().len());
        for s in self.layout.segments() {
            put_u32(&mut out, match s.kind {
                SegmentKind::Gaussian => 0,
                SegmentKind::Categorical(k) => k,
            });
        }
        put_u32(&mut out, self.schedule.steps());
        put_f64s(&mut out, self.schedule.betas());
        put_u32(&mut out, self.denoiser.embed_width());
        put_u32(&mut out, self.denoiser.dims().len());
        for &d in self.denoiser.dims() {
            put_u32(&mut out, d);
        }
        out.extend_from_slice(&(self.denoiser.params().len() as u64).to_le_bytes());
        put_f64s(&mut out, self.denoiser.params());
        put_u32(&mut out, self.loss_trace.len());
        put_f64s(&mut out, &self.loss_trace);
        out
    }

    /// Decode a container, refusing it unless it was trained for `expected`.
    pub fn from_bytes(bytes: &[u8], expected: &EncodedLayout) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != Self::MAGIC {
            return Err(Error::ModelFormat("not a diffusion model file".into()));
        }
        let version = r.u32()?;
        if version != Self::VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let fingerprint = r.u64()?;
        if fingerprint != expected.fingerprint() {
            return Err(Error::ModelFormat("model was trained for a different codec layout".into()));
        }
        let n_segments = r.u32()? as usize;
        let mut kinds = Vec::with_capacity(n_segments);
        for _ in 0..n_segments {
            kinds.push(match r.u32()? {
                0 => SegmentKind::Gaussian,
                k => SegmentKind::Categorical(k as usize),
            });
        }
        let layout = EncodedLayout::new(kinds)?;
        if &layout != expected {
            return Err(Error::ModelFormat("model was trained for a different codec layout".into()));
        }
        let steps = r.u32()? as usize;
        let betas = r.f64s(steps)?;
        let schedule = NoiseSchedule::from_betas(betas)?;
        let embed = r.u32()? as usize;
        let n_dims = r.u32()? as usize;
        let dims = (0..n_dims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n_params = r.u64()? as usize;
        let params = r.f64s(n_params)?;
        let denoiser = Denoiser::from_dims(dims, embed, Some(params))?;
        if denoiser.width() != layout.width() {
            return Err(Error::ModelFormat("network width differs from layout width".into()));
        }
        let n_trace = r.u32()? as usize;
        let loss_trace = r.f64s(n_trace)?;
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat("trailing bytes".into()));
        }
        Ok(DiffusionModel { schedule, denoiser, layout, loss_trace })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, expected: &EncodedLayout) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, expected)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelFormat("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::ModelFormat("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
