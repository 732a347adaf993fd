//! Reversible transforms between dataset rows and real vectors.
//!
//! Numeric columns go through an empirical-CDF quantile map onto a standard
//! normal; nominal columns and every label become one-hot blocks (labels use
//! 2-cell `[absent, present]` blocks). The encoded layout is features in
//! column order followed by labels.

mod normal;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, FeatureColumn, MultilabelDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use normal::{norm_cdf, norm_inv};

/// Kind of one contiguous block of encoded coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    /// A single real coordinate diffused with Gaussian noise.
    Gaussian,
    /// A one-hot block of `k` cells diffused multinomially.
    Categorical(usize),
}

impl SegmentKind {
    pub fn width(self) -> usize {
        match self {
            SegmentKind::Gaussian => 1,
            SegmentKind::Categorical(k) => k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub offset: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.kind.width()
    }
}

/// Ordered, contiguous segments covering `[0, width)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedLayout {
    segments: Vec<Segment>,
    width: usize,
}

impl EncodedLayout {
    pub fn new(kinds: impl IntoIterator<Item = SegmentKind>) -> Result<Self> {
        let mut segments = Vec::new();
        let mut offset = 0;
        for kind in kinds {
            if let SegmentKind::Categorical(k) = kind {
                if k < 1 {
                    return Err(Error::Schema("categorical block with no cells".into()));
                }
            }
            segments.push(Segment { kind, offset });
            offset += kind.width();
        }
        Ok(EncodedLayout { segments, width: offset })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gaussian_count(&self) -> usize {
        self.segments.iter().filter(|s| s.kind == SegmentKind::Gaussian).count()
    }

    pub fn categorical_count(&self) -> usize {
        self.segments.len() - self.gaussian_count()
    }

    /// FNV-1a hash of the layout, stable across builds and platforms.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.width as u64);
        for s in &self.segments {
            eat(match s.kind {
                SegmentKind::Gaussian => 0,
                SegmentKind::Categorical(k) => k as u64,
            });
        }
        h
    }
}

/// Empirical-CDF map of one numeric column onto N(0, 1).
///
/// With sorted distinct references `r_0 < ... < r_{n-1}`, reference `r_j`
/// sits at probability `(j + 0.5) / n`; values in between interpolate
/// linearly, and the probability is clipped to `[1/(2n), 1 - 1/(2n)]` before
/// the inverse normal CDF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    reference: Vec<f64>,
}

impl QuantileMap {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("non-finite value in numeric column".into()));
        }
        let mut reference = values.to_vec();
        reference.sort_by(f64::total_cmp);
        reference.dedup();
        Ok(QuantileMap { reference })
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Mid-rank empirical CDF with linear interpolation.
    pub fn probability(&self, v: f64) -> f64 {
        let r = &self.reference;
        let n = r.len() as f64;
        let delta = 0.5 / n;
        let u = match r.binary_search_by(|x| x.total_cmp(&v)) {
            Ok(j) => (j as f64 + 0.5) / n,
            Err(0) => delta,
            Err(j) if j == r.len() => 1.0 - delta,
            Err(j) => {
                let frac = (v - r[j - 1]) / (r[j] - r[j - 1]);
                (j as f64 - 0.5 + frac) / n
            }
        };
        u.clamp(delta, 1.0 - delta)
    }

    pub fn encode(&self, v: f64) -> f64 {
        if self.reference.len() == 1 {
            return 0.0;
        }
        norm_inv(self.probability(v))
    }

    /// Inverse map, clamped to the observed `[min, max]`.
    pub fn decode(&self, z: f64) -> f64 {
        let r = &self.reference;
        let n = r.len();
        if n == 1 || z.is_nan() {
            return r[n / 2];
        }
        let mut pos = (norm_cdf(z) * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        // land exactly on a reference when the round trip put us within rounding of it
        if (pos - pos.round()).abs() < 1e-7 {
            pos = pos.round();
        }
        let j = pos.floor() as usize;
        let frac = pos - j as f64;
        if frac == 0.0 || j + 1 >= n {
            r[j.min(n - 1)]
        } else {
            r[j] + frac * (r[j + 1] - r[j])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FeatureTransform {
    Quantile(QuantileMap),
    OneHot { categories: usize },
}

/// Fitted per-column transforms plus the resulting encoded layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnCodec {
    version: u32,
    columns: Vec<FeatureColumn>,
    labels: Vec<String>,
    transforms: Vec<FeatureTransform>,
    layout: EncodedLayout,
}

const CODEC_VERSION: u32 = 1;

impl ColumnCodec {
    pub fn fit(ds: &MultilabelDataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut transforms = Vec::with_capacity(ds.n_features());
        let mut kinds = Vec::new();
        for (j, c) in ds.columns().iter().enumerate() {
            match &c.kind {
                ColumnKind::Numeric => {
                    let values: Vec<f64> = (0..ds.len()).map(|i| ds.row(i)[j]).collect();
                    transforms.push(FeatureTransform::Quantile(QuantileMap::fit(&values)?));
                    kinds.push(SegmentKind::Gaussian);
                }
                ColumnKind::Nominal(cats) => {
                    transforms.push(FeatureTransform::OneHot { categories: cats.len() });
                    kinds.push(SegmentKind::Categorical(cats.len()));
                }
            }
        }
        kinds.extend(std::iter::repeat_n(SegmentKind::Categorical(2), ds.n_labels()));
        Ok(ColumnCodec {
            version: CODEC_VERSION,
            columns: ds.columns().to_vec(),
            labels: ds.labels().to_vec(),
            transforms,
            layout: EncodedLayout::new(kinds)?,
        })
    }

    pub fn layout(&self) -> &EncodedLayout {
        &self.layout
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    pub fn transforms(&self) -> &[FeatureTransform] {
        &self.transforms
    }

    /// Encoded offset of label `l`'s `[absent, present]` block.
    pub fn label_offset(&self, l: usize) -> usize {
        self.layout.segments()[self.columns.len() + l].offset
    }

    pub fn matches(&self, ds: &MultilabelDataset) -> bool {
        self.columns == ds.columns() && self.labels == ds.labels()
    }

    pub fn encode_row(&self, features: &[f64], labelset: &[bool]) -> Result<Vec<f64>> {
        if features.len() != self.columns.len() {
            return Err(Error::WidthMismatch { expected: self.columns.len(), actual: features.len() });
        }
        if labelset.len() != self.labels.len() {
            return Err(Error::WidthMismatch { expected: self.labels.len(), actual: labelset.len() });
        }
        let mut out = vec![0.0; self.width()];
        let segs = self.layout.segments();
        for ((t, &v), seg) in self.transforms.iter().zip(features).zip(segs) {
            match t {
                FeatureTransform::Quantile(q) => out[seg.offset] = q.encode(v),
                FeatureTransform::OneHot { categories } => {
                    if v.fract() != 0.0 || v < 0.0 || v >= *categories as f64 {
                        return Err(Error::Schema(format!("category index {v} out of range")));
                    }
                    out[seg.offset + v as usize] = 1.0;
                }
            }
        }
        for (l, &on) in labelset.iter().enumerate() {
            out[self.label_offset(l) + on as usize] = 1.0;
        }
        Ok(out)
    }

    pub fn encode(&self, ds: &MultilabelDataset) -> Result<Matrix> {
        if !self.matches(ds) {
            return Err(Error::Schema("dataset schema differs from the fitted codec".into()));
        }
        let mut m = Matrix::zeros(0, self.width());
        for i in 0..ds.len() {
            m.push_row(&self.encode_row(ds.row(i), ds.labelset(i))?);
        }
        Ok(m)
    }

    /// Map an encoded vector back to a feature row and labelset.
    ///
    /// Nominal blocks decode to their argmax (lowest index on ties); a label
    /// is present iff its present cell scores strictly higher than its absent cell.
    pub fn decode(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<bool>)> {
        if v.len() != self.width() {
            return Err(Error::WidthMismatch { expected: self.width(), actual: v.len() });
        }
        let segs = self.layout.segments();
        let features = self
            .transforms
            .iter()
            .zip(segs)
            .map(|(t, seg)| match t {
                FeatureTransform::Quantile(q) => q.decode(v[seg.offset]),
                FeatureTransform::OneHot { .. } => argmax(&v[seg.range()]) as f64,
            })
            .collect();
        let labels = (0..self.labels.len())
            .map(|l| {
                let o = self.label_offset(l);
                v[o + 1] > v[o]
            })
            .collect();
        Ok((features, labels))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let codec: ColumnCodec = serde_json::from_str(text)?;
        if codec.version != CODEC_VERSION {
            return Err(Error::ModelFormat(format!("unsupported codec version {}", codec.version)));
        }
        Ok(codec)
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
