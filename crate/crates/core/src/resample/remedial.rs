//! Labelset splitting of instances where rare and frequent labels co-occur.

use std::time::Instant;

use super::{seconds, ResamplingReport};
use crate::dataset::MultilabelDataset;
use crate::error::Result;
use crate::metrics;

/// Split every instance whose SCUMBLE exceeds the dataset mean.
///
/// The instance keeps its features and its labels with IRlbl at most MeanIR;
/// a copy of its features carrying the remaining labels is appended. An
/// instance is left alone when either side of the split would be empty.
pub fn remedial(ds: &MultilabelDataset) -> Result<(MultilabelDataset, ResamplingReport)> {
    let start = Instant::now();
    let mut report = ResamplingReport::start("REMEDIAL", ds);
    let (Some(mean), false) = (report.meanir_before, ds.is_empty()) else {
        report.warning = Some("no label has a positive instance; dataset unchanged".into());
        return Ok((ds.clone(), report.finish(ds)));
    };
    let ir = metrics::irlbl_all(ds);
    let sc = metrics::scumble(ds)?;

    let mut out = ds.clone();
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut one_sided = 0;
    for (i, &s) in sc.per_instance.iter().enumerate() {
        if s <= sc.global {
            continue;
        }
        let y = ds.labelset(i);
        let keep: Vec<bool> = y.iter().zip(&ir).map(|(&on, r)| on && r.is_some_and(|r| r <= mean)).collect();
        let moved: Vec<bool> = y.iter().zip(&ir).map(|(&on, r)| on && r.is_some_and(|r| r > mean)).collect();
        if !keep.contains(&true) || !moved.contains(&true) {
            one_sided += 1;
            continue;
        }
        out.set_labelset(i, &keep);
        rows.push(ds.row(i).to_vec());
        ys.push(moved);
    }
    if one_sided > 0 {
        report.notes.push(format!("{one_sided} instances above the mean SCUMBLE had labels on one side only"));
    }
    report.split_count = rows.len();
    report.notes.push(format!("{} instances split", rows.len()));
    let out = out.append_instances(&rows, &ys)?;
    report.generate_seconds = seconds(start);
    Ok((out.clone(), report.finish(&out)))
}
