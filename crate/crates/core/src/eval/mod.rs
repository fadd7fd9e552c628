//! Measurement harness: splits, F1 scores, the multi-label decision
//! rule, single-trial evaluation, the frequency baseline, and the
//! training-fraction sweep.

pub mod f1;
pub mod split;

pub use f1::{f1_scores, LabelScores, ScoreReport};
pub use split::{make_split, Split};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classify::{argmax, ClassifierSpec};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::LabelStore;
use crate::numerics::DenseMatrix;
use crate::seeds::derive_seed;

/// How multi-label scores become label sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionRule {
    /// Take as many top-scoring labels as the row truly has.
    TopKTrue,
    /// Keep labels scoring at least the threshold; an empty result falls
    /// back to the single best label.
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalOn {
    Val,
    Test,
}

const SALT_CLF: u64 = 51;
const SALT_FRACTION: u64 = 52;

/// Label sets from a score matrix. `true_counts` gives each row's true
/// set size and is required by the top-k rule; score ties break toward
/// the lower label index.
pub fn multilabel_predict(
    scores: &DenseMatrix,
    rule: DecisionRule,
    true_counts: &[usize],
) -> Result<Vec<Vec<u32>>> {
    match rule {
        DecisionRule::TopKTrue => {
            if true_counts.len() != scores.rows() {
                return Err(Error::data(format!(
                    "predict: {} true-count entries for {} rows",
                    true_counts.len(),
                    scores.rows()
                )));
            }
        }
        DecisionRule::Threshold(t) => {
            if !t.is_finite() {
                return Err(Error::data("predict: threshold must be finite"));
            }
        }
    }
    let mut out = Vec::with_capacity(scores.rows());
    for r in 0..scores.rows() {
        let row = scores.row(r);
        let set: Vec<u32> = match rule {
            DecisionRule::TopKTrue => {
                let k = true_counts[r].min(row.len());
                let mut order: Vec<usize> = (0..row.len()).collect();
                order.sort_by(|&a, &b| {
                    row[b].partial_cmp(&row[a]).expect("finite scores").then(a.cmp(&b))
                });
                let mut set: Vec<u32> = order[..k].iter().map(|&i| i as u32).collect();
                set.sort_unstable();
                set
            }
            DecisionRule::Threshold(t) => {
                let set: Vec<u32> = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s >= t)
                    .map(|(i, _)| i as u32)
                    .collect();
                if set.is_empty() {
                    vec![argmax(row) as u32]
                } else {
                    set
                }
            }
        };
        out.push(set);
    }
    Ok(out)
}

fn check_coverage(embedding: &EmbeddingMatrix, split: &Split) -> Result<()> {
    let n = embedding.n_nodes();
    for part in [&split.train, &split.val, &split.test] {
        if part.iter().any(|&node| node >= n) {
            return Err(Error::data(format!(
                "evaluate: split references node index >= embedding size {n}"
            )));
        }
    }
    Ok(())
}

fn truth_sets(labels: &LabelStore, rows: &[usize]) -> Vec<Vec<u32>> {
    rows.iter().map(|&r| labels.labels_of(r).to_vec()).collect()
}

/// An evaluation result together with the wall-clock cost of its
/// training and scoring phases.
#[derive(Debug, Clone)]
pub struct TimedScore {
    pub report: ScoreReport,
    pub train_seconds: f64,
    pub score_seconds: f64,
}

/// Train on the split's training rows, score the requested part. Test
/// labels are never read when evaluating on the validation part.
pub fn evaluate(
    embedding: &EmbeddingMatrix,
    labels: &LabelStore,
    split: &Split,
    spec: &ClassifierSpec,
    eval_on: EvalOn,
    rule: DecisionRule,
    seed: u64,
) -> Result<ScoreReport> {
    evaluate_timed(embedding, labels, split, spec, eval_on, rule, seed).map(|t| t.report)
}

/// `evaluate` with per-phase timings.
pub fn evaluate_timed(
    embedding: &EmbeddingMatrix,
    labels: &LabelStore,
    split: &Split,
    spec: &ClassifierSpec,
    eval_on: EvalOn,
    rule: DecisionRule,
    seed: u64,
) -> Result<TimedScore> {
    check_coverage(embedding, split)?;
    let x = embedding.matrix();
    let t0 = std::time::Instant::now();
    let model = spec.train(x, labels, &split.train, derive_seed(seed, &[SALT_CLF]))?;
    let train_seconds = t0.elapsed().as_secs_f64();
    let rows = match eval_on {
        EvalOn::Val => &split.val,
        EvalOn::Test => &split.test,
    };
    let t1 = std::time::Instant::now();
    let scores = model.predict_proba(x, rows);
    let truth = truth_sets(labels, rows);
    let predicted = if labels.task().single_label() {
        (0..scores.rows())
            .map(|r| vec![argmax(scores.row(r)) as u32])
            .collect()
    } else {
        let counts: Vec<usize> = truth.iter().map(|t| t.len()).collect();
        multilabel_predict(&scores, rule, &counts)?
    };
    let report = f1_scores(labels.n_labels(), &truth, &predicted, labels.task())?;
    Ok(TimedScore {
        report,
        train_seconds,
        score_seconds: t1.elapsed().as_secs_f64(),
    })
}

/// Score of always predicting the training part's most frequent label,
/// measured on the test part. Frequency ties break toward the lower
/// label index.
pub fn most_frequent_baseline(labels: &LabelStore, split: &Split) -> Result<ScoreReport> {
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::data("baseline: empty train or test part"));
    }
    let mut counts = vec![0u64; labels.n_labels()];
    for &node in &split.train {
        for &l in labels.labels_of(node) {
            counts[l as usize] += 1;
        }
    }
    let best = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i as u32)
        .expect("non-empty vocabulary");
    let truth = truth_sets(labels, &split.test);
    let predicted = vec![vec![best]; split.test.len()];
    f1_scores(labels.n_labels(), &truth, &predicted, labels.task())
}

/// Seeded nested subset of the training rows: the first ceil(f * n) of a
/// fixed shuffle, returned in original order.
pub(crate) fn fraction_subset(train: &[usize], fraction: f64, seed: u64) -> Vec<usize> {
    let mut shuffled = train.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[SALT_FRACTION]));
    shuffled.shuffle(&mut rng);
    let k = (fraction * train.len() as f64).ceil() as usize;
    let mut subset = shuffled[..k.min(train.len())].to_vec();
    subset.sort_unstable();
    subset
}

/// Evaluation at growing training fractions. Subsets are nested; the
/// fraction 1.0 entry reproduces `evaluate` exactly.
pub fn fraction_sweep(
    embedding: &EmbeddingMatrix,
    labels: &LabelStore,
    split: &Split,
    spec: &ClassifierSpec,
    fractions: &[f64],
    eval_on: EvalOn,
    rule: DecisionRule,
    seed: u64,
) -> Result<Vec<(f64, ScoreReport)>> {
    if fractions.is_empty() {
        return Err(Error::data("sweep: no fractions given"));
    }
    if fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::data("sweep: fractions must lie in (0, 1]"));
    }
    let mut out = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let sub = Split {
            train: fraction_subset(&split.train, f, seed),
            val: split.val.clone(),
            test: split.test.clone(),
            fractions: split.fractions,
            seed: split.seed,
        };
        let report = evaluate(embedding, labels, &sub, spec, eval_on, rule, seed)?;
        out.push((f, report));
    }
    Ok(out)
}
