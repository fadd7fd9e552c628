//! Downstream classifiers: one-vs-rest logistic regression and random
//! forest, both usable for binary, multiclass, and multi-label tasks.

pub mod forest;
pub mod logreg;

pub use forest::{forest_predict_proba, train_random_forest, ForestModel, ForestParams};
pub use logreg::{logreg_predict_proba, train_logreg, LogRegModel, LogRegParams};

use crate::error::Result;
use crate::graph::LabelStore;
use crate::numerics::DenseMatrix;

/// Which classifier to train, with its hyperparameters.
#[derive(Debug, Clone)]
pub enum ClassifierSpec {
    LogReg(LogRegParams),
    Forest(ForestParams),
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::LogReg(_) => "logreg",
            ClassifierSpec::Forest(_) => "forest",
        }
    }

    pub fn train(
        &self,
        x: &DenseMatrix,
        labels: &LabelStore,
        rows: &[usize],
        seed: u64,
    ) -> Result<TrainedClassifier> {
        match self {
            ClassifierSpec::LogReg(p) => {
                train_logreg(x, labels, rows, p, seed).map(TrainedClassifier::LogReg)
            }
            ClassifierSpec::Forest(p) => {
                train_random_forest(x, labels, rows, p, seed).map(TrainedClassifier::Forest)
            }
        }
    }
}

pub enum TrainedClassifier {
    LogReg(LogRegModel),
    Forest(ForestModel),
}

impl TrainedClassifier {
    /// Per-row, per-label scores with one column per vocab label.
    pub fn predict_proba(&self, x: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
        match self {
            TrainedClassifier::LogReg(m) => logreg_predict_proba(m, x, rows),
            TrainedClassifier::Forest(m) => forest_predict_proba(m, x, rows),
        }
    }
}

/// Index of the largest score, ties broken toward the lower index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}
