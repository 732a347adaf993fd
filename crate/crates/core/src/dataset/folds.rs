use std::path::Path;

use rand::seq::SliceRandom;

use super::{parse_arff, parse_label_header, MultilabelDataset};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct Fold {
    pub train: MultilabelDataset,
    pub test: MultilabelDataset,
}

/// Train/test partitions sharing one schema.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldSet {
    folds: Vec<Fold>,
}

impl FoldSet {
    pub fn new(folds: Vec<Fold>) -> Result<Self> {
        let Some(first) = folds.first() else {
            return Err(Error::Schema("a fold set needs at least one fold".into()));
        };
        let reference = &first.train;
        for (i, f) in folds.iter().enumerate() {
            if !f.train.same_schema(reference) || !f.test.same_schema(reference) {
                return Err(Error::Schema(format!("fold {} has a different schema", i + 1)));
            }
        }
        Ok(FoldSet { folds })
    }

    /// Random `k`-way partition of `ds`; every instance lands in exactly one test split.
    pub fn k_fold(ds: &MultilabelDataset, k: usize, seed: u64) -> Result<Self> {
        if k < 2 || k > ds.len() {
            return Err(Error::param("folds", format!("need 2 <= k <= {}, got {k}", ds.len())));
        }
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut seed::rng(seed, seed::stream::FOLDS));
        let mut folds = Vec::with_capacity(k);
        for f in 0..k {
            let mut test: Vec<usize> = order.iter().copied().skip(f).step_by(k).collect();
            test.sort_unstable();
            let train: Vec<usize> = (0..ds.len()).filter(|i| test.binary_search(i).is_err()).collect();
            folds.push(Fold { train: ds.select(&train), test: ds.select(&test) });
        }
        FoldSet::new(folds)
    }

    /// Load pre-partitioned folds. `{fold}` in the patterns is replaced by 1..=k,
    /// e.g. `emotions-5-{fold}tra.arff` / `emotions-5-{fold}tst.arff`.
    pub fn load(
        train_pattern: &str,
        test_pattern: &str,
        xml_path: impl AsRef<Path>,
        k: usize,
    ) -> Result<Self> {
        if !train_pattern.contains("{fold}") || !test_pattern.contains("{fold}") {
            return Err(Error::param("pattern", "fold patterns must contain `{fold}`"));
        }
        let labels = parse_label_header(&std::fs::read_to_string(xml_path)?)?;
        let read = |pattern: &str, i: usize| -> Result<MultilabelDataset> {
            let path = pattern.replace("{fold}", &i.to_string());
            let text = std::fs::read_to_string(&path).map_err(|e| {
                std::io::Error::new(e.kind(), format!("{path}: {e}"))
            })?;
            parse_arff(&text, &labels)
        };
        let folds = (1..=k)
            .map(|i| Ok(Fold { train: read(train_pattern, i)?, test: read(test_pattern, i)? }))
            .collect::<Result<Vec<_>>>()?;
        FoldSet::new(folds)
    }

    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }
}
