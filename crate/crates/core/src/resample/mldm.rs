//! Diffusion-based oversampling: train one model on the instances that carry
//! a minority label and append complete synthetic instances drawn from it.

use std::time::Instant;

use super::{quota, seconds, ResamplingReport};
use crate::dataset::MultilabelDataset;
use crate::diffusion::{self, DiffusionConfig, DiffusionModel};
use crate::encoding::ColumnCodec;
use crate::error::{Error, Result};
use crate::metrics;

/// A diffusion model fitted to the minority subset of one dataset.
#[derive(Clone, Debug)]
pub struct MldmGenerator {
    minority: Vec<usize>,
    train_size: usize,
    codec: ColumnCodec,
    model: DiffusionModel,
}

/// Decoded synthetic instances plus sampling statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub rows: Vec<Vec<f64>>,
    pub labelsets: Vec<Vec<bool>>,
    /// Samples drawn, accepted or not.
    pub attempts: usize,
    /// Instances accepted only after forcing a minority label on.
    pub fallbacks: usize,
}

impl MldmGenerator {
    /// Freeze the minority labels of `ds`, then encode and train on every
    /// instance that carries at least one of them.
    pub fn fit(ds: &MultilabelDataset, config: &DiffusionConfig, seed: u64) -> Result<Self> {
        let minority = metrics::minority_label_indices(ds);
        let subset: Vec<usize> = (0..ds.len())
            .filter(|&i| minority.iter().any(|&l| ds.labelset(i)[l]))
            .collect();
        if subset.is_empty() {
            return Err(Error::NoMinorityInstances);
        }
        let train = ds.select(&subset);
        let codec = ColumnCodec::fit(&train)?;
        let rows = codec.encode(&train)?;
        let config = DiffusionConfig { seed, ..config.clone() };
        let model = diffusion::train(&rows, codec.layout(), &config)?;
        Ok(MldmGenerator { minority, train_size: subset.len(), codec, model })
    }

    pub fn minority_labels(&self) -> &[usize] {
        &self.minority
    }

    /// Size of the training subset.
    pub fn train_size(&self) -> usize {
        self.train_size
    }

    pub fn codec(&self) -> &ColumnCodec {
        &self.codec
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    /// Draw instances until `target` of them carry a minority label.
    ///
    /// After `10 * target` draws the shortfall is filled with the earliest
    /// rejected draws, each given the minority label whose present cell had
    /// the highest final-step probability.
    pub fn generate(&self, target: usize, seed: u64) -> Result<Generated> {
        let limit = 10 * target;
        let mut out = Generated { rows: Vec::new(), labelsets: Vec::new(), attempts: 0, fallbacks: 0 };
        let mut rejected = Vec::new();
        while out.rows.len() < target && out.attempts < limit {
            let (values, scores) = self.model.sample_scored(out.attempts, 1, seed)?;
            out.attempts += 1;
            let (row, labels) = self.codec.decode(values.row(0))?;
            if self.minority.iter().any(|&l| labels[l]) {
                out.rows.push(row);
                out.labelsets.push(labels);
            } else if rejected.len() < target {
                rejected.push((row, labels, scores.row(0).to_vec()));
            }
        }
        for (row, mut labels, scores) in rejected.into_iter().take(target - out.rows.len()) {
            let mut best = self.minority[0];
            for &l in &self.minority[1..] {
                if scores[self.codec.label_offset(l) + 1] > scores[self.codec.label_offset(best) + 1] {
                    best = l;
                }
            }
            labels[best] = true;
            out.rows.push(row);
            out.labelsets.push(labels);
            out.fallbacks += 1;
        }
        Ok(out)
    }
}

/// Append `round(p% * |ds|)` synthetic instances, each carrying at least one
/// label that was a minority label of `ds`.
pub fn mldm_resample(
    ds: &MultilabelDataset,
    p: f64,
    config: &DiffusionConfig,
    seed: u64,
) -> Result<(MultilabelDataset, ResamplingReport)> {
    let target = quota(p, ds.len())?;
    config.validate()?;
    let mut report = ResamplingReport::start("MLDM", ds);
    report.p = Some(p);
    report.seed = Some(seed);

    let start = Instant::now();
    let generator = MldmGenerator::fit(ds, config, seed)?;
    report.fit_seconds = seconds(start);

    let start = Instant::now();
    let generated = generator.generate(target, seed)?;
    let out = ds.append_instances(&generated.rows, &generated.labelsets)?;
    report.generate_seconds = seconds(start);

    report.synthetic_count = generated.rows.len();
    report.notes.push(format!(
        "trained on {} instances carrying minority labels {:?}",
        generator.train_size(),
        generator.minority_labels().iter().map(|&l| ds.labels()[l].as_str()).collect::<Vec<_>>()
    ));
    report.notes.push(format!("{} samples drawn, {} accepted by fallback", generated.attempts, generated.fallbacks));
    Ok((out.clone(), report.finish(&out)))
}
