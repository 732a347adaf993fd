//! Multilabel dataset model and MULAN-format I/O.

mod arff;
mod folds;
mod header;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arff::{parse_arff, write_arff};
pub use folds::{Fold, FoldSet};
pub use header::parse_label_header;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    /// Ordered, duplicate-free category names.
    Nominal(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ColumnKind,
}

impl FeatureColumn {
    pub fn numeric(name: impl Into<String>) -> Self {
        FeatureColumn { name: name.into(), kind: ColumnKind::Numeric }
    }

    pub fn nominal<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let categories: Vec<String> = categories.into_iter().map(Into::into).collect();
        if categories.is_empty() {
            return Err(Error::Schema(format!("nominal column `{name}` has no categories")));
        }
        let mut seen = HashSet::new();
        for c in &categories {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!(
                    "nominal column `{name}` repeats category `{c}`"
                )));
            }
        }
        Ok(FeatureColumn { name, kind: ColumnKind::Nominal(categories) })
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, ColumnKind::Numeric)
    }

    /// Number of categories, or `None` for numeric columns.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            ColumnKind::Numeric => None,
            ColumnKind::Nominal(c) => Some(c.len()),
        }
    }
}

/// Immutable table of multilabel instances.
///
/// Feature values are stored row-major as `f64`; nominal cells hold the
/// category index. Labelsets are a dense `|D| x |L|` boolean matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilabelDataset {
    name: String,
    columns: Vec<FeatureColumn>,
    labels: Vec<String>,
    features: Vec<f64>,
    labelsets: Vec<bool>,
}

impl MultilabelDataset {
    /// Build a dataset from flat row-major buffers, validating every invariant.
    pub fn new(
        name: impl Into<String>,
        columns: Vec<FeatureColumn>,
        labels: Vec<String>,
        features: Vec<f64>,
        labelsets: Vec<bool>,
    ) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Schema(format!(
                "a multilabel dataset needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        let mut names = HashSet::new();
        for c in &columns {
            if let ColumnKind::Nominal(cats) = &c.kind {
                // re-run the constructor checks for hand-built columns
                FeatureColumn::nominal(c.name.clone(), cats.iter().cloned())?;
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
        }
        for l in &labels {
            if !names.insert(l.as_str()) {
                return Err(Error::Schema(format!("duplicate label or column name `{l}`")));
            }
        }
        let f = columns.len();
        let n_labels = labels.len();
        if !labelsets.len().is_multiple_of(n_labels) {
            return Err(Error::Schema("labelset buffer is not a whole number of rows".into()));
        }
        let n = labelsets.len() / n_labels;
        if features.len() != n * f {
            return Err(Error::Schema(format!(
                "feature buffer holds {} values, expected {} rows x {} columns",
                features.len(),
                n,
                f
            )));
        }
        let ds = MultilabelDataset { name: name.into(), columns, labels, features, labelsets };
        for i in 0..n {
            ds.check_row(ds.row(i))?;
        }
        Ok(ds)
    }

    /// Build from per-instance rows.
    pub fn from_rows(
        name: impl Into<String>,
        columns: Vec<FeatureColumn>,
        labels: Vec<String>,
        rows: &[Vec<f64>],
        labelsets: &[Vec<bool>],
    ) -> Result<Self> {
        if rows.len() != labelsets.len() {
            return Err(Error::Schema(format!(
                "{} feature rows but {} labelsets",
                rows.len(),
                labelsets.len()
            )));
        }
        let f = columns.len();
        let l = labels.len();
        let mut features = Vec::with_capacity(rows.len() * f);
        let mut flat = Vec::with_capacity(rows.len() * l);
        for (r, y) in rows.iter().zip(labelsets) {
            if r.len() != f || y.len() != l {
                return Err(Error::Schema(format!(
                    "row has {} features / {} labels, schema has {f} / {l}",
                    r.len(),
                    y.len()
                )));
            }
            features.extend_from_slice(r);
            flat.extend_from_slice(y);
        }
        Self::new(name, columns, labels, features, flat)
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "row has {} features, schema has {}",
                row.len(),
                self.columns.len()
            )));
        }
        for (v, c) in row.iter().zip(&self.columns) {
            match &c.kind {
                ColumnKind::Numeric => {
                    if !v.is_finite() {
                        return Err(Error::Schema(format!(
                            "non-finite value in numeric column `{}`",
                            c.name
                        )));
                    }
                }
                ColumnKind::Nominal(cats) => {
                    if v.fract() != 0.0 || *v < 0.0 || *v >= cats.len() as f64 {
                        return Err(Error::Schema(format!(
                            "value {v} is not a category index of column `{}` ({} categories)",
                            c.name,
                            cats.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labelsets.len() / self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let f = self.columns.len();
        &self.features[i * f..(i + 1) * f]
    }

    pub fn labelset(&self, i: usize) -> &[bool] {
        let l = self.labels.len();
        &self.labelsets[i * l..(i + 1) * l]
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    /// Number of instances carrying each label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.labels.len()];
        for i in 0..self.len() {
            for (c, &on) in counts.iter_mut().zip(self.labelset(i)) {
                if on {
                    *c += 1;
                }
            }
        }
        counts
    }

    /// Same column and label schema (names and kinds, in order).
    pub fn same_schema(&self, other: &MultilabelDataset) -> bool {
        self.columns == other.columns && self.labels == other.labels
    }

    /// Dataset restricted to the given instance indices, in that order.
    pub fn select(&self, indices: &[usize]) -> MultilabelDataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features());
        let mut labelsets = Vec::with_capacity(indices.len() * self.n_labels());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labelsets.extend_from_slice(self.labelset(i));
        }
        MultilabelDataset {
            name: self.name.clone(),
            columns: self.columns.clone(),
            labels: self.labels.clone(),
            features,
            labelsets,
        }
    }

    /// A copy with `n` more instances appended; `self` is untouched.
    pub fn append_instances(
        &self,
        new_rows: &[Vec<f64>],
        new_labelsets: &[Vec<bool>],
    ) -> Result<MultilabelDataset> {
        if new_rows.len() != new_labelsets.len() {
            return Err(Error::Schema(format!(
                "{} feature rows but {} labelsets",
                new_rows.len(),
                new_labelsets.len()
            )));
        }
        let mut out = self.clone();
        for (r, y) in new_rows.iter().zip(new_labelsets) {
            if y.len() != self.n_labels() {
                return Err(Error::Schema(format!(
                    "labelset has {} entries, schema has {} labels",
                    y.len(),
                    self.n_labels()
                )));
            }
            self.check_row(r)?;
            out.features.extend_from_slice(r);
            out.labelsets.extend_from_slice(y);
        }
        Ok(out)
    }

    /// Same instances with one labelset replaced.
    pub(crate) fn set_labelset(&mut self, i: usize, labelset: &[bool]) {
        let l = self.labels.len();
        self.labelsets[i * l..(i + 1) * l].copy_from_slice(labelset);
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Read an ARFF file and its MULAN XML label header.
pub fn load(arff_path: impl AsRef<Path>, xml_path: impl AsRef<Path>) -> Result<MultilabelDataset> {
    let xml = std::fs::read_to_string(xml_path)?;
    let labels = parse_label_header(&xml)?;
    let arff = std::fs::read_to_string(arff_path)?;
    parse_arff(&arff, &labels)
}

/// Write a MULAN XML label header for `labels`.
pub fn write_label_header(labels: &[String]) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n",
    );
    for l in labels {
        let escaped = l
            .replace('&', "&amp;")
            .replace('"', "&quot;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        out.push_str(&format!("<label name=\"{escaped}\"></label>\n"));
    }
    out.push_str("</labels>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rejects_single_label() {
        let err = MultilabelDataset::new("x", vec![], labels(&["A"]), vec![], vec![]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn rejects_label_column_name_clash() {
        let cols = vec![FeatureColumn::numeric("A")];
        assert!(MultilabelDataset::new("x", cols, labels(&["A", "B"]), vec![], vec![]).is_err());
    }

    #[test]
    fn nominal_needs_unique_categories() {
        assert!(FeatureColumn::nominal("c", ["a", "a"]).is_err());
        assert!(FeatureColumn::nominal("c", Vec::<String>::new()).is_err());
    }

    #[test]
    fn append_zero_rows_is_identity() {
        let ds = toy::td4();
        assert_eq!(ds.append_instances(&[], &[]).unwrap(), ds);
    }

    #[test]
    fn append_grows_and_keeps_input() {
        let ds = toy::td4();
        let out = ds.append_instances(&[vec![0.7]], &[vec![false, true, true]]).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(ds.len(), 4);
        assert_eq!(out.labelset(4), &[false, true, true]);
        assert!(out.same_schema(&ds));
    }

    #[test]
    fn append_rejects_bad_nominal_index() {
        let cols = vec![FeatureColumn::nominal("color", ["red", "green"]).unwrap()];
        let ds = MultilabelDataset::from_rows(
            "c",
            cols,
            labels(&["A", "B"]),
            &[vec![1.0]],
            &[vec![true, false]],
        )
        .unwrap();
        assert!(ds.append_instances(&[vec![2.0]], &[vec![true, false]]).is_err());
        assert!(ds.append_instances(&[vec![0.5]], &[vec![true, false]]).is_err());
        assert!(ds.append_instances(&[vec![1.0]], &[vec![true]]).is_err());
    }

    #[test]
    fn header_writer_round_trips() {
        let names = labels(&["amazed-suprised", "a&b"]);
        assert_eq!(parse_label_header(&write_label_header(&names)).unwrap(), names);
    }
}
