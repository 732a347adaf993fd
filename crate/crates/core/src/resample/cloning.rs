//! Random oversampling by cloning whole instances.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;

use super::{quota, seconds, ResamplingReport};
use crate::dataset::MultilabelDataset;
use crate::error::Result;
use crate::metrics;
use crate::seed;

fn with_clones(ds: &MultilabelDataset, picks: &[usize]) -> Result<MultilabelDataset> {
    let rows: Vec<Vec<f64>> = picks.iter().map(|&i| ds.row(i).to_vec()).collect();
    let ys: Vec<Vec<bool>> = picks.iter().map(|&i| ds.labelset(i).to_vec()).collect();
    ds.append_instances(&rows, &ys)
}

/// How many clones each bag receives: an equal share of `total`, the
/// remainder going one each to the first bags, every bag capped at `caps`,
/// and whatever a capped bag cannot take handed round to bags with room left.
fn allocate(total: usize, caps: &[usize]) -> Vec<usize> {
    let m = caps.len();
    let mut alloc: Vec<usize> = (0..m).map(|i| total / m + usize::from(i < total % m)).collect();
    let mut spare = 0;
    for (a, &c) in alloc.iter_mut().zip(caps) {
        if *a > c {
            spare += *a - c;
            *a = c;
        }
    }
    while spare > 0 {
        let mut moved = false;
        for (a, &c) in alloc.iter_mut().zip(caps) {
            if spare > 0 && *a < c {
                *a += 1;
                spare -= 1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    alloc
}

/// Labelset-level random oversampling.
///
/// Instances are grouped by identical labelset. Bags smaller than the mean
/// bag size are minority bags; the quota `round(p% * |ds|)` is split evenly
/// over them (rarest first for the remainder) and each bag is grown by random
/// clones of its own members, never beyond the mean size.
pub fn lpros(ds: &MultilabelDataset, p: f64, seed: u64) -> Result<(MultilabelDataset, ResamplingReport)> {
    let total = quota(p, ds.len())?;
    let start = Instant::now();
    let mut report = ResamplingReport::start("LP-ROS", ds);
    report.p = Some(p);
    report.seed = Some(seed);

    let mut index: HashMap<&[bool], usize> = HashMap::new();
    let mut bags: Vec<Vec<usize>> = Vec::new();
    for i in 0..ds.len() {
        let b = *index.entry(ds.labelset(i)).or_insert_with(|| {
            bags.push(Vec::new());
            bags.len() - 1
        });
        bags[b].push(i);
    }
    let mean = ds.len() as f64 / bags.len().max(1) as f64;
    let mut minority: Vec<&Vec<usize>> = bags.iter().filter(|b| (b.len() as f64) < mean).collect();
    if minority.is_empty() {
        report.warning = Some("no labelset is less frequent than the mean; dataset unchanged".into());
        report.generate_seconds = seconds(start);
        return Ok((ds.clone(), report.finish(ds)));
    }
    minority.sort_by_key(|b| (b.len(), b[0]));
    let caps: Vec<usize> = minority.iter().map(|b| (mean - b.len() as f64).ceil() as usize).collect();
    let alloc = allocate(total, &caps);

    let mut rng = seed::rng(seed, seed::stream::RESAMPLE);
    let mut picks = Vec::with_capacity(total);
    for (bag, &n) in minority.iter().zip(&alloc) {
        for _ in 0..n {
            picks.push(bag[rng.random_range(0..bag.len())]);
        }
    }
    if picks.len() < total {
        report.notes.push(format!(
            "{} of {total} clones placed; minority bags reached the mean size",
            picks.len()
        ));
    }
    let out = with_clones(ds, &picks)?;
    report.synthetic_count = picks.len();
    report.generate_seconds = seconds(start);
    Ok((out.clone(), report.finish(&out)))
}

/// Label-level random oversampling.
///
/// Minority labels are visited round robin; each visit clones a random
/// original instance carrying that label. Every 10 clones IRlbl is recomputed
/// and labels no longer above the original MeanIR drop out.
pub fn mlros(ds: &MultilabelDataset, p: f64, seed: u64) -> Result<(MultilabelDataset, ResamplingReport)> {
    let total = quota(p, ds.len())?;
    let start = Instant::now();
    let mut report = ResamplingReport::start("ML-ROS", ds);
    report.p = Some(p);
    report.seed = Some(seed);

    let mut active = metrics::minority_label_indices(ds);
    let Some(mean_ir) = report.meanir_before.filter(|_| !active.is_empty()) else {
        report.warning = Some("no minority labels; dataset unchanged".into());
        report.generate_seconds = seconds(start);
        return Ok((ds.clone(), report.finish(ds)));
    };
    let bags: Vec<Vec<usize>> = (0..ds.n_labels())
        .map(|l| (0..ds.len()).filter(|&i| ds.labelset(i)[l]).collect())
        .collect();
    let mut counts = ds.label_counts();
    let mut rng = seed::rng(seed, seed::stream::RESAMPLE);
    let mut picks = Vec::with_capacity(total);
    let mut cursor = 0;
    while picks.len() < total && !active.is_empty() {
        cursor %= active.len();
        let bag = &bags[active[cursor]];
        let i = bag[rng.random_range(0..bag.len())];
        picks.push(i);
        for (c, &on) in counts.iter_mut().zip(ds.labelset(i)) {
            *c += on as usize;
        }
        cursor += 1;
        if picks.len() % 10 == 0 {
            let max = *counts.iter().max().unwrap() as f64;
            active.retain(|&l| max / counts[l] as f64 > mean_ir);
        }
    }
    if picks.len() < total {
        report.notes.push(format!(
            "{} of {total} clones placed; every label reached the original MeanIR",
            picks.len()
        ));
    }
    let out = with_clones(ds, &picks)?;
    report.synthetic_count = picks.len();
    report.generate_seconds = seconds(start);
    Ok((out.clone(), report.finish(&out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy;

    fn is_clone_of_some_row(out: &MultilabelDataset, n: usize, i: usize) -> bool {
        (0..n).any(|j| out.row(j) == out.row(i) && out.labelset(j) == out.labelset(i))
    }

    #[test]
    fn allocation_shares_and_caps() {
        assert_eq!(allocate(10, &[100, 100, 100]), vec![4, 3, 3]);
        assert_eq!(allocate(10, &[1, 100, 100]), vec![1, 5, 4]);
        assert_eq!(allocate(10, &[1, 2, 3]), vec![1, 2, 3]);
        assert_eq!(allocate(0, &[5]), vec![0]);
    }

    #[test]
    fn lpros_clones_exact_rows_within_quota() {
        let ds = toy::random_small(100, 4, 3);
        let (out, report) = lpros(&ds, 25.0, 9).unwrap();
        assert!(report.synthetic_count <= 25);
        assert_eq!(out.len(), ds.len() + report.synthetic_count);
        for i in 0..ds.len() {
            assert_eq!(out.row(i), ds.row(i));
            assert_eq!(out.labelset(i), ds.labelset(i));
        }
        for i in ds.len()..out.len() {
            assert!(is_clone_of_some_row(&out, ds.len(), i));
        }
    }

    #[test]
    fn lpros_balanced_labelsets_are_unchanged() {
        let ds = MultilabelDataset::from_rows(
            "b",
            vec![],
            vec!["a".into(), "b".into()],
            &[vec![], vec![], vec![], vec![]],
            &[vec![true, false], vec![false, true], vec![true, false], vec![false, true]],
        )
        .unwrap();
        let (out, report) = lpros(&ds, 50.0, 1).unwrap();
        assert_eq!(out, ds);
        assert!(report.warning.is_some());
    }

    #[test]
    fn lpros_is_deterministic() {
        let ds = toy::imbalanced(200, 2);
        assert_eq!(lpros(&ds, 25.0, 4).unwrap().0, lpros(&ds, 25.0, 4).unwrap().0);
    }

    #[test]
    fn mlros_td4() {
        let ds = toy::td4();
        let (out, report) = mlros(&ds, 50.0, 0).unwrap();
        assert_eq!(report.synthetic_count, 2);
        assert_eq!(out.len(), 6);
        for i in 4..6 {
            let y = out.labelset(i);
            assert!(y[1] || y[2]);
            assert!(is_clone_of_some_row(&out, 4, i));
        }
    }

    #[test]
    fn mlros_balanced_is_unchanged() {
        let ds = MultilabelDataset::from_rows(
            "b",
            vec![],
            vec!["a".into(), "b".into()],
            &[vec![], vec![]],
            &[vec![true, false], vec![false, true]],
        )
        .unwrap();
        let (out, report) = mlros(&ds, 100.0, 0).unwrap();
        assert_eq!(out, ds);
        assert!(report.warning.is_some());
    }

    #[test]
    fn mlros_stops_when_labels_catch_up() {
        let ds = toy::imbalanced(300, 5);
        let (out, report) = mlros(&ds, 400.0, 1).unwrap();
        assert_eq!(out.len(), ds.len() + report.synthetic_count);
        assert!(report.meanir_after.unwrap() < report.meanir_before.unwrap());
    }
}
