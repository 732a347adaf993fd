//! Small constructed datasets used by tests, the acceptance harness and demos.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{FeatureColumn, MultilabelDataset};
use crate::seed;

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Four instances over labels {A, B, C}: {A}, {A, B}, {A}, {C}, one numeric feature.
pub fn td4() -> MultilabelDataset {
    MultilabelDataset::from_rows(
        "TD4",
        vec![FeatureColumn::numeric("x")],
        vec!["A".into(), "B".into(), "C".into()],
        &[vec![0.1], vec![0.4], vec![0.35], vec![0.8]],
        &[
            vec![true, false, false],
            vec![true, true, false],
            vec![true, false, false],
            vec![false, false, true],
        ],
    )
    .expect("TD4 is valid")
}

/// Two well separated Gaussian clusters in 2-D: the first carries only label
/// `A`, the second only label `B`.
pub fn two_clusters(n: usize, seed: u64) -> MultilabelDataset {
    let mut rng = seed::rng(seed, 0);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let c = if i % 2 == 0 { -3.0 } else { 3.0 };
        rows.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
        ys.push(vec![i % 2 == 0, i % 2 == 1]);
    }
    MultilabelDataset::from_rows(
        "two-clusters",
        vec![FeatureColumn::numeric("x1"), FeatureColumn::numeric("x2")],
        vec!["A".into(), "B".into()],
        &rows,
        &ys,
    )
    .expect("valid")
}

/// Label frequencies of [`imbalanced`]; their IRlbl values average close to 10.
pub const IMBALANCED_FREQUENCIES: [f64; 8] = [0.6, 0.5, 0.35, 0.2, 0.05, 0.04, 0.03, 0.025];

/// Imbalanced multilabel dataset with 8 labels drawn independently with
/// [`IMBALANCED_FREQUENCIES`] (so rare labels co-occur with frequent ones),
/// six numeric features that depend on the labelset, and one nominal feature.
pub fn imbalanced(n: usize, seed: u64) -> MultilabelDataset {
    labelled("imbalanced", n, 6, &IMBALANCED_FREQUENCIES, true, seed)
}

/// Label frequencies close to those of the emotions music dataset.
pub const EMOTIONS_FREQUENCIES: [f64; 6] = [0.292, 0.280, 0.445, 0.250, 0.283, 0.526];

/// A dataset with the shape of emotions: 593 instances, 72 numeric features
/// and 6 labels.
pub fn emotions_scale(seed: u64) -> MultilabelDataset {
    labelled("emotions-scale", 593, 72, &EMOTIONS_FREQUENCIES, false, seed)
}

/// Independent labels with the given frequencies; each numeric feature is a
/// random linear function of the labelset plus noise. With `nominal`, a
/// column `size` records whether the instance has 0, 1 or more labels.
pub fn labelled(name: &str, n: usize, n_numeric: usize, frequencies: &[f64], nominal: bool, seed: u64) -> MultilabelDataset {
    let mut rng = seed::rng(seed, 0);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let l = frequencies.len();
    let weights: Vec<f64> = (0..n_numeric * l).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let y: Vec<bool> = frequencies.iter().map(|&p| rng.random_bool(p)).collect();
        let mut row: Vec<f64> = (0..n_numeric)
            .map(|j| {
                let signal: f64 = (0..l).filter(|&k| y[k]).map(|k| weights[j * l + k]).sum();
                signal + noise.sample(&mut rng)
            })
            .collect();
        if nominal {
            row.push(y.iter().filter(|&&b| b).count().min(2) as f64);
        }
        rows.push(row);
        ys.push(y);
    }
    let mut columns: Vec<FeatureColumn> = names("f", n_numeric).into_iter().map(FeatureColumn::numeric).collect();
    if nominal {
        columns.push(FeatureColumn::nominal("size", ["none", "one", "many"]).unwrap());
    }
    MultilabelDataset::from_rows(name, columns, names("L", l), &rows, &ys).expect("valid")
}

/// Random dataset with `n` instances, `l` labels and one numeric plus one
/// nominal feature; label density varies with the seed.
pub fn random_small(n: usize, l: usize, seed: u64) -> MultilabelDataset {
    let mut rng = seed::rng(seed, 0);
    let density = rng.random_range(0.1..0.7);
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        rows.push(vec![rng.random_range(-5.0..5.0), rng.random_range(0..3) as f64]);
        ys.push((0..l).map(|_| rng.random_bool(density)).collect());
    }
    let columns = vec![
        FeatureColumn::numeric("x"),
        FeatureColumn::nominal("c", ["a", "b", "c"]).unwrap(),
    ];
    MultilabelDataset::from_rows("random", columns, names("L", l), &rows, &ys).expect("valid")
}

/// `n` draws of N(mean, std).
pub fn gaussian_column(n: usize, mean: f64, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed, 0);
    let d = Normal::new(mean, std).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}
