//! Multilabel SMOTE: synthetic instances interpolated between a minority
//! instance and one of its nearest neighbors.

use std::time::Instant;

use rand::Rng;

use super::{seconds, ResamplingReport};
use crate::dataset::{ColumnKind, MultilabelDataset};
use crate::error::{Error, Result};
use crate::metrics;
use crate::neighbors::Metric;
use crate::seed;

/// Most frequent nominal value among `values`; `values[0]` (the seed) wins
/// any tie it takes part in, otherwise the lowest category does.
pub(crate) fn majority(values: &[f64], categories: usize) -> f64 {
    let mut counts = vec![0usize; categories];
    for &v in values {
        counts[v as usize] += 1;
    }
    let best = *counts.iter().max().unwrap();
    if counts[values[0] as usize] == best {
        values[0]
    } else {
        counts.iter().position(|&c| c == best).unwrap() as f64
    }
}

/// Labels present in more than half of `k + 1` labelsets.
pub(crate) fn ranked_labels<'a>(labelsets: impl IntoIterator<Item = &'a [bool]>, n_labels: usize) -> Vec<bool> {
    let mut counts = vec![0usize; n_labels];
    let mut members = 0;
    for y in labelsets {
        members += 1;
        for (c, &on) in counts.iter_mut().zip(y) {
            *c += on as usize;
        }
    }
    counts.into_iter().map(|c| 2 * c > members).collect()
}

/// One pass per label, in label order. A label is processed when its IRlbl,
/// recomputed on the data grown so far, exceeds the current MeanIR; every
/// instance carrying it then seeds one synthetic instance built from its `k`
/// nearest neighbors among the other carriers.
pub fn mlsmote(ds: &MultilabelDataset, k: usize, seed: u64) -> Result<(MultilabelDataset, ResamplingReport)> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    let start = Instant::now();
    let mut report = ResamplingReport::start("MLSMOTE", ds);
    report.k = Some(k);
    report.seed = Some(seed);
    if metrics::minority_label_indices(ds).is_empty() {
        report.warning = Some("no minority labels; dataset unchanged".into());
        report.generate_seconds = seconds(start);
        return Ok((ds.clone(), report.finish(ds)));
    }

    let metric = Metric::fit(ds);
    let mut rng = seed::rng(seed, seed::stream::RESAMPLE);
    let mut work = ds.clone();
    for l in 0..ds.n_labels() {
        let ir = metrics::irlbl_all(&work);
        let mean = metrics::mean_ir(&work)?;
        if !ir[l].is_some_and(|r| r > mean) {
            continue;
        }
        let bag: Vec<usize> = (0..work.len()).filter(|&i| work.labelset(i)[l]).collect();
        if bag.len() < k + 1 {
            report.notes.push(format!(
                "label `{}` skipped: {} carriers, {} needed",
                ds.labels()[l],
                bag.len(),
                k + 1
            ));
            continue;
        }
        let mut rows = Vec::with_capacity(bag.len());
        let mut ys = Vec::with_capacity(bag.len());
        for &s in &bag {
            let nn = metric.nearest(&work, work.row(s), bag.iter().copied(), k, Some(s));
            let r = nn[rng.random_range(0..nn.len())];
            let (seed_row, ref_row) = (work.row(s), work.row(r));
            let row: Vec<f64> = ds
                .columns()
                .iter()
                .enumerate()
                .map(|(j, c)| match &c.kind {
                    ColumnKind::Numeric => {
                        let gap: f64 = rng.random();
                        seed_row[j] + gap * (ref_row[j] - seed_row[j])
                    }
                    ColumnKind::Nominal(cats) => {
                        let values: Vec<f64> =
                            std::iter::once(s).chain(nn.iter().copied()).map(|i| work.row(i)[j]).collect();
                        majority(&values, cats.len())
                    }
                })
                .collect();
            let y = ranked_labels(
                std::iter::once(s).chain(nn.iter().copied()).map(|i| work.labelset(i)),
                ds.n_labels(),
            );
            rows.push(row);
            ys.push(y);
        }
        report.synthetic_count += rows.len();
        work = work.append_instances(&rows, &ys)?;
    }
    report.generate_seconds = seconds(start);
    Ok((work.clone(), report.finish(&work)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy;

    #[test]
    fn majority_prefers_seed_on_ties() {
        assert_eq!(majority(&[2.0, 1.0, 1.0, 2.0], 3), 2.0);
        assert_eq!(majority(&[0.0, 1.0, 1.0, 2.0], 3), 1.0);
        assert_eq!(majority(&[0.0, 1.0, 2.0, 1.0, 2.0], 3), 1.0);
    }

    #[test]
    fn ranking_needs_strict_majority() {
        let on = [true, false];
        let off = [false, true];
        let y = ranked_labels([&on[..], &on, &on, &on], 2);
        assert_eq!(y, vec![true, false]);
        let y = ranked_labels([&on[..], &on, &off, &off], 2);
        assert_eq!(y, vec![false, false]);
        let y = ranked_labels([&on[..], &on, &on, &off], 2);
        assert_eq!(y, vec![true, false]);
    }

    #[test]
    fn numeric_values_stay_between_seed_and_reference_range() {
        let ds = toy::imbalanced(200, 8);
        let (out, report) = mlsmote(&ds, 3, 2).unwrap();
        assert!(report.synthetic_count > 0);
        assert_eq!(out.len(), ds.len() + report.synthetic_count);
        for j in 0..6 {
            let lo = (0..ds.len()).map(|i| ds.row(i)[j]).fold(f64::INFINITY, f64::min);
            let hi = (0..ds.len()).map(|i| ds.row(i)[j]).fold(f64::NEG_INFINITY, f64::max);
            for i in ds.len()..out.len() {
                assert!(out.row(i)[j] >= lo && out.row(i)[j] <= hi);
            }
        }
        for i in 0..ds.len() {
            assert_eq!(out.row(i), ds.row(i));
        }
    }

    #[test]
    fn no_minority_labels_is_unchanged() {
        let ds = MultilabelDataset::from_rows(
            "b",
            vec![],
            vec!["a".into(), "b".into()],
            &[vec![], vec![]],
            &[vec![true, false], vec![false, true]],
        )
        .unwrap();
        assert_eq!(mlsmote(&ds, 1, 0).unwrap().0, ds);
    }

    #[test]
    fn too_few_carriers_are_noted() {
        let (out, report) = mlsmote(&toy::td4(), 3, 0).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(report.notes.len(), 2);
    }
}
