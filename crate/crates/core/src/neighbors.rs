//! Mixed-type distance and brute-force nearest neighbors.
//!
//! Numeric columns are rescaled to [0, 1] by the min/max of a reference
//! dataset; nominal columns contribute 0 on a match and 1 on a mismatch.

use crate::dataset::MultilabelDataset;

#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    /// Column range for numeric columns, `None` for nominal ones.
    ranges: Vec<Option<f64>>,
}

impl Metric {
    pub fn fit(ds: &MultilabelDataset) -> Self {
        let ranges = ds
            .columns()
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.is_numeric().then(|| {
                    let (lo, hi) = (0..ds.len())
                        .map(|i| ds.row(i)[j])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    if ds.is_empty() {
                        0.0
                    } else {
                        hi - lo
                    }
                })
            })
            .collect();
        Metric { ranges }
    }

    /// Squared distance; order-equivalent to the Euclidean distance.
    pub fn squared(&self, a: &[f64], b: &[f64]) -> f64 {
        self.ranges
            .iter()
            .zip(a.iter().zip(b))
            .map(|(s, (&x, &y))| match s {
                Some(range) if *range > 0.0 => {
                    let d = (x - y) / range;
                    d * d
                }
                Some(_) => 0.0,
                None => (x != y) as u8 as f64,
            })
            .sum()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.squared(a, b).sqrt()
    }

    /// The `k` candidates closest to `query`, nearest first. Equal distances
    /// are ordered by candidate index; `exclude` is never returned.
    pub fn nearest(
        &self,
        ds: &MultilabelDataset,
        query: &[f64],
        candidates: impl IntoIterator<Item = usize>,
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = candidates
            .into_iter()
            .filter(|&i| Some(i) != exclude)
            .map(|i| (self.squared(query, ds.row(i)), i))
            .collect();
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if scored.len() > k {
            scored.select_nth_unstable_by(k, by_distance);
            scored.truncate(k);
        }
        scored.sort_by(by_distance);
        scored.into_iter().map(|(_, i)| i).collect()
    }
}
