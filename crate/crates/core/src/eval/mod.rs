//! Classification impact of resampling: MLkNN, the five measures,
//! cross-validation and average ranks.

mod measures;
mod mlknn;

use serde::{Deserialize, Serialize};

use crate::dataset::{FoldSet, MultilabelDataset};
use crate::error::{Error, Result};
use crate::resample::{ResamplerSpec, ResamplingReport};
use crate::seed;

pub use measures::{confusion, f1_from_counts, f1_sample, hamming_loss, macro_f1, micro_f1, one_error, OneError};
pub use mlknn::{Mlknn, MlknnConfig, Prediction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    HammingLoss,
    F1,
    MacroF1,
    MicroF1,
    OneError,
}

impl Measure {
    pub const ALL: [Measure; 5] = [Measure::HammingLoss, Measure::F1, Measure::MacroF1, Measure::MicroF1, Measure::OneError];

    pub fn name(self) -> &'static str {
        match self {
            Measure::HammingLoss => "HL",
            Measure::F1 => "F1",
            Measure::MacroF1 => "MacroF1",
            Measure::MicroF1 => "MicroF1",
            Measure::OneError => "OE",
        }
    }

    pub fn lower_is_better(self) -> bool {
        matches!(self, Measure::HammingLoss | Measure::OneError)
    }
}

/// The five measures for one set of predictions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub hl: f64,
    pub f1: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub one_error: f64,
}

impl Scores {
    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::HammingLoss => self.hl,
            Measure::F1 => self.f1,
            Measure::MacroF1 => self.macro_f1,
            Measure::MicroF1 => self.micro_f1,
            Measure::OneError => self.one_error,
        }
    }

    fn from_fn(f: impl Fn(Measure) -> f64) -> Self {
        Scores {
            hl: f(Measure::HammingLoss),
            f1: f(Measure::F1),
            macro_f1: f(Measure::MacroF1),
            micro_f1: f(Measure::MicroF1),
            one_error: f(Measure::OneError),
        }
    }
}

/// Score `predictions` against the labelsets of `truth`. Returns the number
/// of instances one-error had to skip alongside the scores.
pub fn score(truth: &MultilabelDataset, predictions: &[Prediction]) -> Result<(Scores, usize)> {
    let y: Vec<Vec<bool>> = (0..truth.len()).map(|i| truth.labelset(i).to_vec()).collect();
    let z: Vec<Vec<bool>> = predictions.iter().map(|p| p.labels.clone()).collect();
    let s: Vec<Vec<f64>> = predictions.iter().map(|p| p.scores.clone()).collect();
    let oe = one_error(&y, &s)?;
    Ok((
        Scores {
            hl: hamming_loss(&y, &z)?,
            f1: f1_sample(&y, &z)?,
            macro_f1: macro_f1(&y, &z)?,
            micro_f1: micro_f1(&y, &z)?,
            one_error: oe.value,
        },
        oe.skipped,
    ))
}

/// Outcome of one fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub train_size: usize,
    pub resampled_train_size: usize,
    pub test_size: usize,
    pub scores: Scores,
    pub one_error_skipped: usize,
    #[serde(skip)]
    pub resampling: Option<ResamplingReport>,
}

/// All folds of one resampler on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub resampler: String,
    pub folds: Vec<FoldOutcome>,
    pub mean: Scores,
    /// Sample standard deviation across folds.
    pub std: Scores,
}

impl CvResult {
    pub fn fit_seconds(&self) -> f64 {
        self.folds.iter().filter_map(|f| f.resampling.as_ref()).map(|r| r.fit_seconds).sum()
    }

    pub fn generate_seconds(&self) -> f64 {
        self.folds.iter().filter_map(|f| f.resampling.as_ref()).map(|r| r.generate_seconds).sum()
    }
}

/// Seed used for fold `i` of a run seeded with `seed`.
pub fn fold_seed(seed: u64, i: usize) -> u64 {
    seed::derive(seed::derive(seed, seed::stream::CV), i as u64)
}

fn run_fold(
    folds: &FoldSet,
    i: usize,
    resampler: &ResamplerSpec,
    classifier: MlknnConfig,
    seed: u64,
) -> Result<FoldOutcome> {
    let fold = &folds.folds()[i];
    let (train, report) = resampler.apply(&fold.train, fold_seed(seed, i))?;
    let model = Mlknn::train(&train, classifier)?;
    let predictions = model.predict_all(&fold.test)?;
    let (scores, skipped) = score(&fold.test, &predictions)?;
    Ok(FoldOutcome {
        fold: i + 1,
        train_size: fold.train.len(),
        resampled_train_size: train.len(),
        test_size: predictions.len(),
        scores,
        one_error_skipped: skipped,
        resampling: Some(report),
    })
}

/// Resample each training split, train MLkNN on it and score the untouched
/// test split. Up to `jobs` folds run at once; results do not depend on it.
pub fn cross_validate(
    folds: &FoldSet,
    resampler: &ResamplerSpec,
    classifier: MlknnConfig,
    seed: u64,
    jobs: usize,
) -> Result<CvResult> {
    if folds.len() < 2 {
        return Err(Error::param("folds", format!("need at least 2 folds, got {}", folds.len())));
    }
    resampler.validate()?;
    classifier.validate()?;
    let jobs = jobs.clamp(1, folds.len());
    let mut slots: Vec<Option<Result<FoldOutcome>>> = (0..folds.len()).map(|_| None).collect();
    if jobs == 1 {
        for (i, slot) in slots.iter_mut().enumerate() {
            *slot = Some(run_fold(folds, i, resampler, classifier, seed));
        }
    } else {
        std::thread::scope(|scope| {
            for (w, chunk) in slots.chunks_mut(folds.len().div_ceil(jobs)).enumerate() {
                let first = w * folds.len().div_ceil(jobs);
                scope.spawn(move || {
                    for (j, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(run_fold(folds, first + j, resampler, classifier, seed));
                    }
                });
            }
        });
    }
    let outcomes: Vec<FoldOutcome> = slots.into_iter().map(|s| s.expect("every fold ran")).collect::<Result<_>>()?;
    let n = outcomes.len() as f64;
    let mean = Scores::from_fn(|m| outcomes.iter().map(|o| o.scores.get(m)).sum::<f64>() / n);
    let std = Scores::from_fn(|m| {
        let mu = mean.get(m);
        (outcomes.iter().map(|o| (o.scores.get(m) - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    Ok(CvResult { resampler: resampler.name().to_string(), folds: outcomes, mean, std })
}

/// Ranks of `values` (1 = best); tied values share the mean of their ranks.
pub fn rank_values(values: &[f64], lower_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let c = values[a].total_cmp(&values[b]);
        if lower_is_better {
            c
        } else {
            c.reverse()
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let shared = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// One (dataset, measure) cell: a value per resampler, in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct RankCell {
    pub measure: Measure,
    pub values: Vec<Option<f64>>,
}

/// Mean rank of each of `n` resamplers over all cells.
pub fn average_ranks(n: usize, cells: &[RankCell]) -> Result<Vec<f64>> {
    if cells.is_empty() {
        return Err(Error::param("cells", "nothing to rank"));
    }
    let mut sums = vec![0.0; n];
    for (c, cell) in cells.iter().enumerate() {
        if cell.values.len() != n {
            return Err(Error::param("cells", format!("cell {c} has {} values for {n} resamplers", cell.values.len())));
        }
        let values: Vec<f64> = cell
            .values
            .iter()
            .enumerate()
            .map(|(r, v)| {
                v.filter(|v| !v.is_nan())
                    .ok_or_else(|| Error::param("cells", format!("cell {c} has no value for resampler {r}")))
            })
            .collect::<Result<_>>()?;
        for (s, r) in sums.iter_mut().zip(rank_values(&values, cell.measure.lower_is_better())) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / cells.len() as f64).collect())
}

/// Cross-validation results of one dataset under several resamplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetResults {
    pub dataset: String,
    pub results: Vec<CvResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResamplerRanks {
    pub resampler: String,
    /// Mean rank over datasets, one entry per measure in [`Measure::ALL`] order.
    pub per_measure: Vec<f64>,
    /// Mean rank over every (dataset, measure) cell.
    pub overall: f64,
}

/// Dataset x resampler grid with mean/std cells and average ranks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: u32,
    pub seed: u64,
    pub classifier: MlknnConfig,
    pub resamplers: Vec<String>,
    pub datasets: Vec<DatasetResults>,
    pub ranks: Vec<ResamplerRanks>,
}

impl EvaluationReport {
    /// Assemble a report; every dataset must list the resamplers in the same order.
    pub fn new(seed: u64, classifier: MlknnConfig, datasets: Vec<DatasetResults>) -> Result<Self> {
        let resamplers: Vec<String> = datasets
            .first()
            .map(|d| d.results.iter().map(|r| r.resampler.clone()).collect())
            .unwrap_or_default();
        for d in &datasets {
            let names: Vec<&String> = d.results.iter().map(|r| &r.resampler).collect();
            if names != resamplers.iter().collect::<Vec<_>>() {
                return Err(Error::param("methods", format!("dataset `{}` has a different method list", d.dataset)));
            }
        }
        let n = resamplers.len();
        let cell = |d: &DatasetResults, m: Measure| RankCell {
            measure: m,
            values: d.results.iter().map(|r| Some(r.mean.get(m))).collect(),
        };
        let mut per_measure = vec![vec![0.0; Measure::ALL.len()]; n];
        for (mi, &m) in Measure::ALL.iter().enumerate() {
            let cells: Vec<RankCell> = datasets.iter().map(|d| cell(d, m)).collect();
            for (r, v) in average_ranks(n, &cells)?.into_iter().enumerate() {
                per_measure[r][mi] = v;
            }
        }
        let all: Vec<RankCell> = datasets.iter().flat_map(|d| Measure::ALL.map(|m| cell(d, m))).collect();
        let overall = average_ranks(n, &all)?;
        let ranks = resamplers
            .iter()
            .zip(per_measure)
            .zip(overall)
            .map(|((name, per_measure), overall)| ResamplerRanks { resampler: name.clone(), per_measure, overall })
            .collect();
        Ok(EvaluationReport { schema: 1, seed, classifier, resamplers, datasets, ranks })
    }

    /// Aligned text table: one block per measure, `mean±std` per cell,
    /// followed by the average ranks.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let name_w = self.resamplers.iter().map(|r| r.len()).max().unwrap_or(0).max(10);
        let col_w = self.datasets.iter().map(|d| d.dataset.len()).max().unwrap_or(0).max(13);
        for m in Measure::ALL {
            out.push_str(&format!("{}\n{:<name_w$}", m.name(), "Resampling"));
            for d in &self.datasets {
                out.push_str(&format!("  {:>col_w$}", d.dataset));
            }
            out.push('\n');
            for (r, name) in self.resamplers.iter().enumerate() {
                out.push_str(&format!("{name:<name_w$}"));
                for d in &self.datasets {
                    let c = &d.results[r];
                    let cell = format!("{:.4}±{:.4}", c.mean.get(m), c.std.get(m));
                    out.push_str(&format!("  {cell:>col_w$}"));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out.push_str(&format!("Average rank\n{:<name_w$}", "Resampling"));
        for m in Measure::ALL {
            out.push_str(&format!("  {:>8}", m.name()));
        }
        out.push_str(&format!("  {:>8}\n", "All"));
        for r in &self.ranks {
            out.push_str(&format!("{:<name_w$}", r.resampler));
            for v in &r.per_measure {
                out.push_str(&format!("  {v:>8.4}"));
            }
            out.push_str(&format!("  {:>8.4}\n", r.overall));
        }
        out
    }

    /// One CSV row per (dataset, resampler, measure).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,resampler,measure,mean,std\n");
        for d in &self.datasets {
            for r in &d.results {
                for m in Measure::ALL {
                    out.push_str(&format!(
                        "{},{},{},{:.4},{:.4}\n",
                        d.dataset,
                        r.resampler,
                        m.name(),
                        r.mean.get(m),
                        r.std.get(m)
                    ));
                }
            }
        }
        out
    }
}

/// Wall-clock time of each phase of a resampler run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub fit_seconds: f64,
    pub generate_seconds: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.fit_seconds + self.generate_seconds
    }
}

/// Run a resampler once and report its phase times. Methods without a
/// separate fitting phase report `fit_seconds = 0`.
pub fn time_phases(spec: &ResamplerSpec, ds: &MultilabelDataset, seed: u64) -> Result<(PhaseTimes, ResamplingReport)> {
    let (_, report) = spec.apply(ds, seed)?;
    Ok((PhaseTimes { fit_seconds: report.fit_seconds, generate_seconds: report.generate_seconds }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(rank_values(&[0.9, 0.5], false), vec![1.0, 2.0]);
        assert_eq!(rank_values(&[0.9, 0.5], true), vec![2.0, 1.0]);
        assert_eq!(rank_values(&[0.7, 0.7], false), vec![1.5, 1.5]);
        assert_eq!(rank_values(&[0.1, 0.3, 0.3, 0.2], false), vec![4.0, 1.5, 1.5, 3.0]);
    }

    #[test]
    fn average_rank_hand_grid() {
        let cells = vec![
            RankCell { measure: Measure::MicroF1, values: vec![Some(0.8), Some(0.6), Some(0.7)] },
            RankCell { measure: Measure::HammingLoss, values: vec![Some(0.2), Some(0.1), Some(0.1)] },
        ];
        let r = average_ranks(3, &cells).unwrap();
        assert_eq!(r, vec![(1.0 + 3.0) / 2.0, (3.0 + 1.5) / 2.0, (2.0 + 1.5) / 2.0]);
        assert_eq!(r.iter().sum::<f64>(), 6.0);
        let missing = vec![RankCell { measure: Measure::F1, values: vec![Some(0.5), None] }];
        assert!(average_ranks(2, &missing).is_err());
        assert!(average_ranks(3, &missing).is_err());
    }

    #[test]
    fn separable_clusters_score_well() {
        let folds = FoldSet::k_fold(&toy::two_clusters(100, 3), 5, 1).unwrap();
        let cv = cross_validate(&folds, &ResamplerSpec::Identity, MlknnConfig { k: 3, s: 1.0 }, 0, 1).unwrap();
        assert!(cv.mean.micro_f1 >= 0.9);
        assert_eq!(cv.folds.iter().map(|f| f.test_size).sum::<usize>(), 100);
    }

    #[test]
    fn parallel_folds_match_sequential() {
        let folds = FoldSet::k_fold(&toy::imbalanced(150, 2), 5, 1).unwrap();
        let spec = ResamplerSpec::Mlros { p: 25.0 };
        let a = cross_validate(&folds, &spec, MlknnConfig::default(), 4, 1).unwrap();
        let b = cross_validate(&folds, &spec, MlknnConfig::default(), 4, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn single_phase_methods_report_zero_fit() {
        let (t, _) = time_phases(&ResamplerSpec::Lpros { p: 25.0 }, &toy::td4(), 0).unwrap();
        assert_eq!(t.fit_seconds, 0.0);
        assert!(t.generate_seconds >= 0.0 && t.total() < 1.0);
    }

    #[test]
    fn report_ranks_and_table() {
        let folds = FoldSet::k_fold(&toy::two_clusters(40, 3), 4, 1).unwrap();
        let classifier = MlknnConfig { k: 3, s: 1.0 };
        let results = vec![
            cross_validate(&folds, &ResamplerSpec::Identity, classifier, 0, 1).unwrap(),
            cross_validate(&folds, &ResamplerSpec::Remedial, classifier, 0, 1).unwrap(),
        ];
        let report =
            EvaluationReport::new(0, classifier, vec![DatasetResults { dataset: "toy".into(), results }]).unwrap();
        for r in &report.ranks {
            assert!(r.per_measure.iter().all(|&v| v == 1.0 || v == 1.5 || v == 2.0));
        }
        let table = report.to_table();
        assert!(table.contains("MicroF1") && table.contains("REMEDIAL"));
        assert_eq!(report.to_csv().lines().count(), 1 + 2 * 5);
    }
}
