//! Multilabel k-nearest neighbors with Bayesian neighbor-count evidence.

use serde::{Deserialize, Serialize};

use crate::dataset::MultilabelDataset;
use crate::error::{Error, Result};
use crate::neighbors::Metric;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlknnConfig {
    pub k: usize,
    /// Laplace smoothing of the prior and of the count tables.
    pub s: f64,
}

impl Default for MlknnConfig {
    fn default() -> Self {
        MlknnConfig { k: 10, s: 1.0 }
    }
}

impl MlknnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("knn", "must be at least 1"));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::param("smoothing", "must be a positive number"));
        }
        Ok(())
    }
}

/// Classifier output for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: Vec<bool>,
    /// Posterior probability of each label being present.
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Mlknn {
    config: MlknnConfig,
    metric: Metric,
    train: MultilabelDataset,
    prior: Vec<f64>,
    /// `present[l][j]`: P(j of the k neighbors carry l | l present); same for `absent`.
    present: Vec<Vec<f64>>,
    absent: Vec<Vec<f64>>,
}

impl Mlknn {
    pub fn train(ds: &MultilabelDataset, config: MlknnConfig) -> Result<Self> {
        config.validate()?;
        let k = config.k;
        if ds.len() <= k {
            return Err(Error::param("knn", format!("needs more than {k} training instances, got {}", ds.len())));
        }
        let s = config.s;
        let n = ds.len() as f64;
        let metric = Metric::fit(ds);
        let prior: Vec<f64> = ds.label_counts().iter().map(|&c| (s + c as f64) / (2.0 * s + n)).collect();

        let l = ds.n_labels();
        let mut with = vec![vec![0usize; k + 1]; l];
        let mut without = vec![vec![0usize; k + 1]; l];
        for i in 0..ds.len() {
            let nn = metric.nearest(ds, ds.row(i), 0..ds.len(), k, Some(i));
            let counts = neighbor_counts(ds, &nn);
            for (lbl, &on) in ds.labelset(i).iter().enumerate() {
                if on {
                    with[lbl][counts[lbl]] += 1;
                } else {
                    without[lbl][counts[lbl]] += 1;
                }
            }
        }
        let smooth = |table: Vec<Vec<usize>>| -> Vec<Vec<f64>> {
            table
                .into_iter()
                .map(|row| {
                    let total: usize = row.iter().sum();
                    row.iter().map(|&c| (s + c as f64) / (s * (k + 1) as f64 + total as f64)).collect()
                })
                .collect()
        };
        Ok(Mlknn {
            config,
            metric,
            train: ds.clone(),
            prior,
            present: smooth(with),
            absent: smooth(without),
        })
    }

    pub fn config(&self) -> MlknnConfig {
        self.config
    }

    /// P(label present) before looking at neighbors.
    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.train.n_features() {
            return Err(Error::WidthMismatch { expected: self.train.n_features(), actual: row.len() });
        }
        let nn = self.metric.nearest(&self.train, row, 0..self.train.len(), self.config.k, None);
        let counts = neighbor_counts(&self.train, &nn);
        let scores: Vec<f64> = counts
            .iter()
            .enumerate()
            .map(|(l, &j)| {
                let yes = self.prior[l] * self.present[l][j];
                let no = (1.0 - self.prior[l]) * self.absent[l][j];
                yes / (yes + no)
            })
            .collect();
        let labels = scores.iter().map(|&p| p > 0.5).collect();
        Ok(Prediction { labels, scores })
    }

    /// Predictions for every instance of `ds`, which must share the training schema.
    pub fn predict_all(&self, ds: &MultilabelDataset) -> Result<Vec<Prediction>> {
        if !ds.same_schema(&self.train) {
            return Err(Error::Schema("test data schema differs from the training data".into()));
        }
        (0..ds.len()).map(|i| self.predict(ds.row(i))).collect()
    }
}

fn neighbor_counts(ds: &MultilabelDataset, nn: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; ds.n_labels()];
    for &i in nn {
        for (c, &on) in counts.iter_mut().zip(ds.labelset(i)) {
            *c += on as usize;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureColumn;
    use crate::toy;

    fn line(ys: &[[bool; 2]]) -> MultilabelDataset {
        let rows: Vec<Vec<f64>> = (0..ys.len()).map(|i| vec![i as f64]).collect();
        let ys: Vec<Vec<bool>> = ys.iter().map(|y| y.to_vec()).collect();
        MultilabelDataset::from_rows("line", vec![FeatureColumn::numeric("x")], vec!["A".into(), "B".into()], &rows, &ys)
            .unwrap()
    }

    #[test]
    fn priors_follow_the_smoothed_frequency() {
        let m = Mlknn::train(&line(&[[true, false]; 10]), MlknnConfig { k: 3, s: 1.0 }).unwrap();
        assert!((m.prior()[0] - 11.0 / 12.0).abs() < 1e-15);
        assert!((m.prior()[1] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn k_must_be_below_size() {
        let ds = line(&[[true, false]; 3]);
        assert!(Mlknn::train(&ds, MlknnConfig { k: 3, s: 1.0 }).is_err());
        assert!(Mlknn::train(&ds, MlknnConfig { k: 2, s: 1.0 }).is_ok());
    }

    #[test]
    fn separated_clusters_are_recovered() {
        let ds = toy::two_clusters(60, 1);
        let m = Mlknn::train(&ds, MlknnConfig { k: 3, s: 1.0 }).unwrap();
        let p = m.predict(&[-3.0, -3.0]).unwrap();
        assert_eq!(p.labels, vec![true, false]);
        let p = m.predict(&[3.0, 3.0]).unwrap();
        assert_eq!(p.labels, vec![false, true]);
        assert!(p.scores.iter().all(|s| s.is_finite() && (0.0..=1.0).contains(s)));
    }

    #[test]
    fn posterior_matches_hand_computation() {
        // A on the first 6 points, B on the last 4; k = 2.
        let ys: Vec<[bool; 2]> = (0..10).map(|i| [i < 6, i >= 6]).collect();
        let ds = line(&ys);
        let m = Mlknn::train(&ds, MlknnConfig { k: 2, s: 1.0 }).unwrap();
        // neighbors carrying A: 2 for instances 0..4, 1 for 5 and 6, 0 for 7..9
        let present_a2 = (1.0 + 5.0) / (3.0 + 6.0);
        let absent_a2 = (1.0 + 0.0) / (3.0 + 4.0);
        let prior_a = 7.0 / 12.0;
        let expected = prior_a * present_a2 / (prior_a * present_a2 + (1.0 - prior_a) * absent_a2);
        let p = m.predict(&[2.0]).unwrap();
        assert!((p.scores[0] - expected).abs() < 1e-12);
        assert!(p.labels[0]);
    }

    #[test]
    fn schema_is_checked() {
        let m = Mlknn::train(&toy::two_clusters(20, 0), MlknnConfig { k: 3, s: 1.0 }).unwrap();
        assert!(m.predict(&[1.0]).is_err());
        assert!(m.predict_all(&toy::td4()).is_err());
    }
}
