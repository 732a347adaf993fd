//! Multilabel imbalance toolkit.
//!
//! The crate covers the whole path from a MULAN-style dataset to an
//! evaluated oversampling run:
//!
//! - [`dataset`]: dataset model, ARFF / XML ingestion and fold handling.
//! - [`metrics`]: cardinality, density, IRlbl, MeanIR, SCUMBLE and the
//!   minority-label rule.
//! - [`encoding`]: reversible row <-> real-vector transforms (quantile map to
//!   a standard normal, one-hot blocks).
//! - [`diffusion`]: mixed Gaussian / multinomial denoising diffusion model.
//! - [`resample`]: the diffusion-based oversampler plus LP-ROS, ML-ROS,
//!   MLSMOTE and REMEDIAL.
//! - [`eval`]: MLkNN, the five multilabel measures, cross-validation and
//!   average ranks.

pub mod dataset;
pub mod diffusion;
pub mod encoding;
mod error;
pub mod eval;
pub mod matrix;
pub mod metrics;
pub mod neighbors;
pub mod resample;
pub mod seed;
pub mod toy;

pub use dataset::{FeatureColumn, ColumnKind, FoldSet, MultilabelDataset};
pub use error::{Error, Result};
pub use matrix::Matrix;
