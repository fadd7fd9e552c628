//! Precision, recall, and F1 over predicted label sets.

use crate::error::{Error, Result};
use crate::graph::TaskKind;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    /// Unweighted mean of per-label F1 over the whole vocabulary.
    pub macro_f1: f64,
    /// F1 of pooled true/false positive/negative counts. Equal to
    /// accuracy on single-label tasks.
    pub micro_f1: f64,
    pub per_label: Vec<LabelScores>,
    pub n_rows: usize,
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores of predicted label sets against true label sets. Sets must hold
/// labels below `n_labels`; single-label tasks must have exactly one
/// label per row on both sides.
pub fn f1_scores(
    n_labels: usize,
    truth: &[Vec<u32>],
    predicted: &[Vec<u32>],
    task: TaskKind,
) -> Result<ScoreReport> {
    if truth.len() != predicted.len() {
        return Err(Error::data(format!(
            "f1: {} true rows vs {} predicted rows",
            truth.len(),
            predicted.len()
        )));
    }
    let mut tp = vec![0u64; n_labels];
    let mut fp = vec![0u64; n_labels];
    let mut fn_ = vec![0u64; n_labels];
    for (t_row, p_row) in truth.iter().zip(predicted) {
        if task.single_label() && (t_row.len() != 1 || p_row.len() != 1) {
            return Err(Error::data(
                "f1: single-label task rows must carry exactly one label",
            ));
        }
        for &l in t_row.iter().chain(p_row) {
            if l as usize >= n_labels {
                return Err(Error::data(format!(
                    "f1: label {l} outside vocabulary of size {n_labels}"
                )));
            }
        }
        for &l in p_row {
            if t_row.contains(&l) {
                tp[l as usize] += 1;
            } else {
                fp[l as usize] += 1;
            }
        }
        for &l in t_row {
            if !p_row.contains(&l) {
                fn_[l as usize] += 1;
            }
        }
    }

    let per_label: Vec<LabelScores> = (0..n_labels)
        .map(|l| {
            let p = ratio(tp[l], tp[l] + fp[l]);
            let r = ratio(tp[l], tp[l] + fn_[l]);
            LabelScores {
                precision: p,
                recall: r,
                f1: f1_of(p, r),
                tp: tp[l],
                fp: fp[l],
                fn_: fn_[l],
            }
        })
        .collect();

    let macro_f1 = per_label.iter().map(|s| s.f1).sum::<f64>() / n_labels as f64;
    let (tp_all, fp_all, fn_all) = (
        tp.iter().sum::<u64>(),
        fp.iter().sum::<u64>(),
        fn_.iter().sum::<u64>(),
    );
    // computed straight from pooled counts so that the single-label
    // micro = accuracy identity is exact in floating point
    let micro_f1 = ratio(2 * tp_all, 2 * tp_all + fp_all + fn_all);

    Ok(ScoreReport {
        macro_f1,
        micro_f1,
        per_label,
        n_rows: truth.len(),
    })
}
