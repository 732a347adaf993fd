//! Multilabel oversampling: the diffusion-based MLDM pipeline and the
//! cloning, SMOTE-style and labelset-splitting baselines.
//!
//! Every resampler is a pure function of its input dataset, parameters and
//! seed. Original instances are kept unchanged and in place, with the single
//! exception of [`remedial`], which rewrites the labelsets of the instances it
//! splits.

mod cloning;
mod mldm;
mod mlsmote;
mod remedial;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::MultilabelDataset;
use crate::diffusion::DiffusionConfig;
use crate::error::{Error, Result};
use crate::metrics;

pub use cloning::{lpros, mlros};
pub use mldm::{mldm_resample, Generated, MldmGenerator};
pub use mlsmote::mlsmote;
pub use remedial::remedial;

/// What a resampler did to a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResamplingReport {
    pub algorithm: String,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub input_size: usize,
    pub output_size: usize,
    /// Instances added by cloning or generation.
    pub synthetic_count: usize,
    /// Instances added by splitting an existing one in two.
    pub split_count: usize,
    pub meanir_before: Option<f64>,
    pub meanir_after: Option<f64>,
    /// Percentage reduction of MeanIR; negative when imbalance grew.
    pub meanir_improvement: Option<f64>,
    pub fit_seconds: f64,
    pub generate_seconds: f64,
    pub warning: Option<String>,
    pub notes: Vec<String>,
}

impl ResamplingReport {
    pub(crate) fn start(algorithm: &str, input: &MultilabelDataset) -> Self {
        ResamplingReport {
            algorithm: algorithm.to_string(),
            p: None,
            k: None,
            seed: None,
            input_size: input.len(),
            output_size: input.len(),
            synthetic_count: 0,
            split_count: 0,
            meanir_before: metrics::mean_ir(input).ok(),
            meanir_after: None,
            meanir_improvement: None,
            fit_seconds: 0.0,
            generate_seconds: 0.0,
            warning: None,
            notes: Vec::new(),
        }
    }

    pub(crate) fn finish(mut self, output: &MultilabelDataset) -> Self {
        self.output_size = output.len();
        self.meanir_after = metrics::mean_ir(output).ok();
        self.meanir_improvement = match (self.meanir_before, self.meanir_after) {
            (Some(b), Some(a)) => metrics::meanir_improvement(b, a).ok(),
            _ => None,
        };
        self
    }

    pub fn total_seconds(&self) -> f64 {
        self.fit_seconds + self.generate_seconds
    }
}

/// Number of instances to add for a percentage `p` of `n`.
pub fn quota(p: f64, n: usize) -> Result<usize> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param("p", format!("must be a positive percentage, got {p}")));
    }
    Ok((p / 100.0 * n as f64).round() as usize)
}

/// Seconds elapsed since `start`.
pub(crate) fn seconds(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// A resampling method together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ResamplerSpec {
    /// Leaves the training data as it is.
    Identity,
    Mldm { p: f64, config: DiffusionConfig },
    Lpros { p: f64 },
    Mlros { p: f64 },
    Mlsmote { k: usize },
    Remedial,
}

impl ResamplerSpec {
    /// Display name used in reports and tables.
    pub fn name(&self) -> &'static str {
        match self {
            ResamplerSpec::Identity => "None",
            ResamplerSpec::Mldm { .. } => "MLDM",
            ResamplerSpec::Lpros { .. } => "LP-ROS",
            ResamplerSpec::Mlros { .. } => "ML-ROS",
            ResamplerSpec::Mlsmote { .. } => "MLSMOTE",
            ResamplerSpec::Remedial => "REMEDIAL",
        }
    }

    /// Check parameters without touching any data.
    pub fn validate(&self) -> Result<()> {
        match self {
            ResamplerSpec::Mldm { p, config } => {
                quota(*p, 0)?;
                config.validate()
            }
            ResamplerSpec::Lpros { p } | ResamplerSpec::Mlros { p } => quota(*p, 0).map(|_| ()),
            ResamplerSpec::Mlsmote { k } if *k == 0 => Err(Error::param("k", "must be at least 1")),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, ds: &MultilabelDataset, seed: u64) -> Result<(MultilabelDataset, ResamplingReport)> {
        match self {
            ResamplerSpec::Identity => {
                let report = ResamplingReport::start(self.name(), ds).finish(ds);
                Ok((ds.clone(), report))
            }
            ResamplerSpec::Mldm { p, config } => mldm_resample(ds, *p, config, seed),
            ResamplerSpec::Lpros { p } => lpros(ds, *p, seed),
            ResamplerSpec::Mlros { p } => mlros(ds, *p, seed),
            ResamplerSpec::Mlsmote { k } => mlsmote(ds, *k, seed),
            ResamplerSpec::Remedial => remedial(ds),
        }
    }
}
