//! Example-based, label-based and ranking-based multilabel measures.
//!
//! `truths[i]` and `predicted[i]` are the true and predicted labelsets of
//! instance `i` as presence vectors over the same label order.

use crate::error::{Error, Result};

fn check<T>(truths: &[Vec<bool>], predicted: &[Vec<T>]) -> Result<usize> {
    if truths.len() != predicted.len() {
        return Err(Error::param(
            "predictions",
            format!("{} truths but {} predictions", truths.len(), predicted.len()),
        ));
    }
    let Some(first) = truths.first() else {
        return Err(Error::EmptyDataset);
    };
    let l = first.len();
    for (y, z) in truths.iter().zip(predicted) {
        if y.len() != l {
            return Err(Error::WidthMismatch { expected: l, actual: y.len() });
        }
        if z.len() != l {
            return Err(Error::WidthMismatch { expected: l, actual: z.len() });
        }
    }
    if l == 0 {
        return Err(Error::param("labels", "no labels"));
    }
    Ok(l)
}

/// `2 tp / (2 tp + fp + fn)`, 0 when nothing was relevant or predicted.
pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Per-label `(tp, fp, fn)`.
pub fn confusion(truths: &[Vec<bool>], predicted: &[Vec<bool>]) -> Result<Vec<(usize, usize, usize)>> {
    let l = check(truths, predicted)?;
    let mut out = vec![(0, 0, 0); l];
    for (y, z) in truths.iter().zip(predicted) {
        for (c, (&t, &p)) in out.iter_mut().zip(y.iter().zip(z)) {
            match (t, p) {
                (true, true) => c.0 += 1,
                (false, true) => c.1 += 1,
                (true, false) => c.2 += 1,
                (false, false) => {}
            }
        }
    }
    Ok(out)
}

/// Mean fraction of labels predicted wrongly.
pub fn hamming_loss(truths: &[Vec<bool>], predicted: &[Vec<bool>]) -> Result<f64> {
    let l = check(truths, predicted)?;
    let wrong: usize = truths
        .iter()
        .zip(predicted)
        .map(|(y, z)| y.iter().zip(z).filter(|(a, b)| a != b).count())
        .sum();
    Ok(wrong as f64 / (truths.len() * l) as f64)
}

/// Harmonic mean of instance-averaged precision and recall. An empty
/// prediction has precision 0 and an empty truth has recall 0.
pub fn f1_sample(truths: &[Vec<bool>], predicted: &[Vec<bool>]) -> Result<f64> {
    check(truths, predicted)?;
    let (mut precision, mut recall) = (0.0, 0.0);
    for (y, z) in truths.iter().zip(predicted) {
        let both = y.iter().zip(z).filter(|(&a, &b)| a && b).count() as f64;
        let ny = y.iter().filter(|&&a| a).count();
        let nz = z.iter().filter(|&&b| b).count();
        if nz > 0 {
            precision += both / nz as f64;
        }
        if ny > 0 {
            recall += both / ny as f64;
        }
    }
    let n = truths.len() as f64;
    let (p, r) = (precision / n, recall / n);
    Ok(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 })
}

/// Mean of per-label F1.
pub fn macro_f1(truths: &[Vec<bool>], predicted: &[Vec<bool>]) -> Result<f64> {
    let c = confusion(truths, predicted)?;
    Ok(c.iter().map(|&(tp, fp, fn_)| f1_from_counts(tp, fp, fn_)).sum::<f64>() / c.len() as f64)
}

/// F1 of the confusion counts summed over labels.
pub fn micro_f1(truths: &[Vec<bool>], predicted: &[Vec<bool>]) -> Result<f64> {
    let c = confusion(truths, predicted)?;
    let (tp, fp, fn_) = c.iter().fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(f1_from_counts(tp, fp, fn_))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneError {
    pub value: f64,
    /// Instances left out because their true labelset is empty.
    pub skipped: usize,
}

/// Fraction of instances whose highest-scoring label is not relevant.
/// Equal top scores go to the lowest label index.
pub fn one_error(truths: &[Vec<bool>], scores: &[Vec<f64>]) -> Result<OneError> {
    check(truths, scores)?;
    let mut counted = 0usize;
    let mut wrong = 0usize;
    for (y, s) in truths.iter().zip(scores) {
        if !y.contains(&true) {
            continue;
        }
        counted += 1;
        if !y[crate::encoding::argmax(s)] {
            wrong += 1;
        }
    }
    if counted == 0 {
        return Err(Error::param("truths", "every instance has an empty labelset"));
    }
    Ok(OneError { value: wrong as f64 / counted as f64, skipped: truths.len() - counted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(rows: &[&str], l: usize) -> Vec<Vec<bool>> {
        rows.iter()
            .map(|r| (0..l).map(|i| r.contains((b'A' + i as u8) as char)).collect())
            .collect()
    }

    #[test]
    fn hamming_worked_example() {
        let y = sets(&["A", "C"], 3);
        let z = sets(&["AB", "C"], 3);
        assert!((hamming_loss(&y, &z).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(hamming_loss(&y, &y).unwrap(), 0.0);
        let inv: Vec<Vec<bool>> = y.iter().map(|r| r.iter().map(|b| !b).collect()).collect();
        assert_eq!(hamming_loss(&y, &inv).unwrap(), 1.0);
    }

    #[test]
    fn sample_f1_worked_example() {
        let f = f1_sample(&sets(&["AB"], 2), &sets(&["A"], 2)).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_sample(&sets(&["AB"], 2), &sets(&["AB"], 2)).unwrap(), 1.0);
        assert_eq!(f1_sample(&sets(&["A"], 2), &sets(&["B"], 2)).unwrap(), 0.0);
        assert_eq!(f1_sample(&sets(&["A"], 2), &sets(&[""], 2)).unwrap(), 0.0);
    }

    #[test]
    fn macro_and_micro_worked_example() {
        let mut y = Vec::new();
        let mut z = Vec::new();
        for i in 0..10 {
            y.push(vec![true, i < 5]);
            z.push(vec![true, false]);
        }
        assert_eq!(macro_f1(&y, &z).unwrap(), 0.5);
        assert_eq!(micro_f1(&y, &z).unwrap(), 0.8);
        assert_eq!(macro_f1(&y, &y).unwrap(), 1.0);
        assert_eq!(micro_f1(&y, &y).unwrap(), 1.0);
        let empty = vec![vec![false, false]; 10];
        assert_eq!(macro_f1(&y, &empty).unwrap(), 0.0);
    }

    #[test]
    fn one_error_counts_and_skips() {
        let y = sets(&["A", "B", ""], 2);
        let s = vec![vec![0.9, 0.1], vec![0.9, 0.1], vec![0.5, 0.5]];
        assert_eq!(one_error(&y, &s).unwrap(), OneError { value: 0.5, skipped: 1 });
        let tie = vec![vec![0.5, 0.5]];
        assert_eq!(one_error(&sets(&["B"], 2), &tie).unwrap().value, 1.0);
        assert_eq!(one_error(&sets(&["A"], 2), &tie).unwrap().value, 0.0);
        assert!(one_error(&sets(&[""], 2), &tie).is_err());
    }

    #[test]
    fn shape_errors() {
        assert!(hamming_loss(&sets(&["A"], 2), &[]).is_err());
        assert!(matches!(hamming_loss(&[], &[]), Err(Error::EmptyDataset)));
        assert!(matches!(
            hamming_loss(&sets(&["A"], 2), &sets(&["A"], 3)),
            Err(Error::WidthMismatch { .. })
        ));
    }
}
