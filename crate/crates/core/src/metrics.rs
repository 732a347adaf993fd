//! Multilabelness and imbalance characterization.
//!
//! Labels with no positive instance (possible inside a single fold) have an
//! undefined IRlbl; they are left out of MeanIR and never count as minority.

use serde::{Deserialize, Serialize};

use crate::dataset::MultilabelDataset;
use crate::error::{Error, Result};

/// Mean number of active labels per instance.
pub fn cardinality(ds: &MultilabelDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let total: usize = ds.label_counts().iter().sum();
    Ok(total as f64 / ds.len() as f64)
}

/// Cardinality divided by the number of labels.
pub fn density(ds: &MultilabelDataset) -> Result<f64> {
    Ok(cardinality(ds)? / ds.n_labels() as f64)
}

/// Per-label imbalance ratio; `None` for labels with no positive instance.
pub fn irlbl_all(ds: &MultilabelDataset) -> Vec<Option<f64>> {
    irlbl_from_counts(&ds.label_counts())
}

fn irlbl_from_counts(counts: &[usize]) -> Vec<Option<f64>> {
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    counts
        .iter()
        .map(|&c| (c > 0).then(|| max / c as f64))
        .collect()
}

/// IRlbl of a single label, by name.
pub fn irlbl(ds: &MultilabelDataset, label: &str) -> Result<f64> {
    let idx = ds
        .label_index(label)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
    irlbl_all(ds)[idx].ok_or_else(|| Error::UndefinedIrlbl(label.to_string()))
}

fn mean_defined(irlbl: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = irlbl.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::NoPositiveLabels);
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Mean of IRlbl over labels with at least one positive instance.
pub fn mean_ir(ds: &MultilabelDataset) -> Result<f64> {
    mean_defined(&irlbl_all(ds))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scumble {
    pub global: f64,
    pub per_instance: Vec<f64>,
}

/// Label concurrence score.
///
/// Per instance: `1 - geometric_mean / arithmetic_mean` of the IRlbl values
/// of its active labels (0 when it has fewer than two). The geometric mean is
/// taken in log space.
pub fn scumble(ds: &MultilabelDataset) -> Result<Scumble> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ir = irlbl_all(ds);
    let per_instance: Vec<f64> = (0..ds.len())
        .map(|i| instance_scumble(ds.labelset(i), &ir))
        .collect();
    let global = per_instance.iter().sum::<f64>() / per_instance.len() as f64;
    Ok(Scumble { global, per_instance })
}

fn instance_scumble(labelset: &[bool], ir: &[Option<f64>]) -> f64 {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut log_sum = 0.0;
    for (&on, r) in labelset.iter().zip(ir) {
        if let (true, Some(r)) = (on, r) {
            n += 1;
            sum += r;
            log_sum += r.ln();
        }
    }
    if n < 2 {
        return 0.0;
    }
    let arithmetic = sum / n as f64;
    let geometric = (log_sum / n as f64).exp();
    // rounding can push the ratio a hair above 1 when all values are equal
    (1.0 - geometric / arithmetic).max(0.0)
}

/// Indices of labels whose IRlbl is strictly greater than MeanIR.
pub fn minority_label_indices(ds: &MultilabelDataset) -> Vec<usize> {
    let ir = irlbl_all(ds);
    let Ok(mean) = mean_defined(&ir) else {
        return Vec::new();
    };
    ir.iter()
        .enumerate()
        .filter_map(|(i, r)| r.filter(|&r| r > mean).map(|_| i))
        .collect()
}

/// Names of the minority labels.
pub fn minority_labels(ds: &MultilabelDataset) -> Vec<String> {
    minority_label_indices(ds)
        .into_iter()
        .map(|i| ds.labels()[i].clone())
        .collect()
}

/// Percentage reduction of MeanIR; negative when imbalance grew.
pub fn meanir_improvement(before: f64, after: f64) -> Result<f64> {
    if !(before > 0.0) {
        return Err(Error::param("before", format!("MeanIR must be positive, got {before}")));
    }
    Ok(100.0 * (before - after) / before)
}

/// Every characterization metric of a dataset at once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceProfile {
    pub instances: usize,
    pub features: usize,
    pub labels: usize,
    pub label_counts: Vec<usize>,
    pub irlbl: Vec<Option<f64>>,
    pub mean_ir: f64,
    pub scumble: f64,
    pub scumble_per_instance: Vec<f64>,
    pub minority_labels: Vec<usize>,
    pub card: f64,
    pub dens: f64,
}

impl ImbalanceProfile {
    pub fn compute(ds: &MultilabelDataset) -> Result<Self> {
        let card = cardinality(ds)?;
        let label_counts = ds.label_counts();
        let irlbl = irlbl_from_counts(&label_counts);
        let mean_ir = mean_defined(&irlbl)?;
        let Scumble { global, per_instance } = scumble(ds)?;
        Ok(ImbalanceProfile {
            instances: ds.len(),
            features: ds.n_features(),
            labels: ds.n_labels(),
            label_counts,
            irlbl,
            mean_ir,
            scumble: global,
            scumble_per_instance: per_instance,
            minority_labels: minority_label_indices(ds),
            card,
            dens: card / ds.n_labels() as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureColumn;
    use crate::toy;

    fn from_counts(counts: &[usize]) -> MultilabelDataset {
        let n = *counts.iter().max().unwrap();
        let labels: Vec<String> = (0..counts.len()).map(|i| format!("L{i}")).collect();
        let rows = vec![vec![]; n];
        let ys: Vec<Vec<bool>> = (0..n).map(|i| counts.iter().map(|&c| i < c).collect()).collect();
        MultilabelDataset::from_rows("c", vec![], labels, &rows, &ys).unwrap()
    }

    #[test]
    fn td4_values() {
        let ds = toy::td4();
        assert_eq!(cardinality(&ds).unwrap(), 1.25);
        assert!((density(&ds).unwrap() - 1.25 / 3.0).abs() < 1e-15);
        assert_eq!(irlbl(&ds, "A").unwrap(), 1.0);
        assert_eq!(irlbl(&ds, "B").unwrap(), 3.0);
        assert_eq!(irlbl(&ds, "C").unwrap(), 3.0);
        assert!((mean_ir(&ds).unwrap() - 7.0 / 3.0).abs() < 1e-15);
        let s = scumble(&ds).unwrap();
        let i2 = 1.0 - 3f64.sqrt() / 2.0;
        assert_eq!(s.per_instance[0], 0.0);
        assert!((s.per_instance[1] - i2).abs() < 1e-15);
        assert!((s.global - i2 / 4.0).abs() < 1e-15);
        assert_eq!(minority_labels(&ds), vec!["B", "C"]);
    }

    #[test]
    fn one_label_per_instance_has_unit_card_and_zero_scumble() {
        let ds = from_counts(&[3, 0, 0]);
        let ds = ds.append_instances(&[vec![]], &[vec![false, true, false]]).unwrap();
        assert_eq!(cardinality(&ds).unwrap(), 1.0);
        assert_eq!(scumble(&ds).unwrap().global, 0.0);
    }

    #[test]
    fn all_labels_everywhere() {
        let ds = from_counts(&[5, 5, 5]);
        assert_eq!(density(&ds).unwrap(), 1.0);
        assert_eq!(mean_ir(&ds).unwrap(), 1.0);
        assert_eq!(scumble(&ds).unwrap().global, 0.0);
        assert!(minority_labels(&ds).is_empty());
    }

    #[test]
    fn dominant_label_with_rare_ones() {
        let ds = from_counts(&[90, 5, 5]);
        assert_eq!(irlbl_all(&ds), vec![Some(1.0), Some(18.0), Some(18.0)]);
        assert!((mean_ir(&ds).unwrap() - 37.0 / 3.0).abs() < 1e-12);
        assert_eq!(minority_label_indices(&ds), vec![1, 2]);
    }

    #[test]
    fn zero_count_labels_are_excluded() {
        let ds = from_counts(&[4, 2, 0]);
        assert!(matches!(irlbl(&ds, "L2"), Err(Error::UndefinedIrlbl(_))));
        assert_eq!(mean_ir(&ds).unwrap(), 1.5);
        assert_eq!(minority_label_indices(&ds), vec![1]);
        let ds = from_counts(&[0, 0]).append_instances(&[vec![]], &[vec![false, false]]).unwrap();
        assert!(matches!(mean_ir(&ds), Err(Error::NoPositiveLabels)));
    }

    #[test]
    fn empty_dataset_errors() {
        let ds = MultilabelDataset::new("e", vec![FeatureColumn::numeric("x")], vec!["a".into(), "b".into()], vec![], vec![]).unwrap();
        assert!(matches!(cardinality(&ds), Err(Error::EmptyDataset)));
        assert!(matches!(scumble(&ds), Err(Error::EmptyDataset)));
    }

    #[test]
    fn improvement_percent() {
        assert_eq!(meanir_improvement(10.0, 5.0).unwrap(), 50.0);
        assert_eq!(meanir_improvement(10.0, 10.0).unwrap(), 0.0);
        assert_eq!(meanir_improvement(10.0, 12.0).unwrap(), -20.0);
        assert!(meanir_improvement(0.0, 1.0).is_err());
    }

    #[test]
    fn unknown_label() {
        assert!(matches!(irlbl(&toy::td4(), "Z"), Err(Error::UnknownLabel(_))));
    }
}
