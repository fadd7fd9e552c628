//! One-vs-rest logistic regression over standardized features, trained
//! by mini-batch gradient descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{LabelStore, TaskKind};
use crate::numerics::{DenseMatrix, Standardizer};
use crate::seeds::derive_seed;

#[derive(Debug, Clone)]
pub struct LogRegParams {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 1e-4,
            lr: 0.1,
            epochs: 100,
            batch: 32,
        }
    }
}

impl LogRegParams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch < 1 {
            return Err(Error::data("logreg: epochs and batch must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::data("logreg: lr must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::data("logreg: l2 must be nonnegative"));
        }
        Ok(())
    }
}

const SALT_EPOCH: u64 = 41;

#[derive(Debug, Clone)]
pub struct LogRegModel {
    task: TaskKind,
    n_vocab: usize,
    standardizer: Standardizer,
    /// One row per trained vector: n_vocab rows, except a single row for
    /// binary tasks.
    weights: DenseMatrix,
    bias: Vec<f64>,
}

impl LogRegModel {
    fn zeroed(task: TaskKind, n_vocab: usize, dim: usize, standardizer: Standardizer) -> Self {
        let n_vectors = if task == TaskKind::Binary { 1 } else { n_vocab };
        LogRegModel {
            task,
            n_vocab,
            standardizer,
            weights: DenseMatrix::zeros(n_vectors, dim),
            bias: vec![0.0; n_vectors],
        }
    }

    pub fn n_vocab(&self) -> usize {
        self.n_vocab
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// 0/1 target matrix for `rows`, one column per trained vector.
fn target_matrix(labels: &LabelStore, rows: &[usize], task: TaskKind, n_vocab: usize) -> DenseMatrix {
    let cols = if task == TaskKind::Binary { 1 } else { n_vocab };
    let mut y = DenseMatrix::zeros(rows.len(), cols);
    for (i, &node) in rows.iter().enumerate() {
        for &l in labels.labels_of(node) {
            if task == TaskKind::Binary {
                if l == 1 {
                    y.set(i, 0, 1.0);
                }
            } else {
                y.set(i, l as usize, 1.0);
            }
        }
    }
    y
}

/// Gradient of mean binary cross-entropy plus (l2/2)|w|^2 on one batch.
/// Returns (weight gradient, bias gradient).
pub(crate) fn batch_gradients(
    weights: &DenseMatrix,
    bias: &[f64],
    xb: &DenseMatrix,
    yb: &DenseMatrix,
    l2: f64,
) -> (DenseMatrix, Vec<f64>) {
    let b = xb.rows() as f64;
    // residual matrix (sigma(z) - y) / B
    let mut g = xb.matmul_bt(weights);
    for r in 0..g.rows() {
        let yr = yb.row(r);
        let gr = g.row_mut(r);
        for c in 0..gr.len() {
            gr[c] = (sigmoid(gr[c] + bias[c]) - yr[c]) / b;
        }
    }
    let mut gw = g.matmul_at(xb);
    for (w, gwv) in weights.data().iter().zip(gw.data_mut()) {
        *gwv += l2 * w;
    }
    let mut gb = vec![0.0; bias.len()];
    for r in 0..g.rows() {
        for (c, &v) in g.row(r).iter().enumerate() {
            gb[c] += v;
        }
    }
    (gw, gb)
}

/// Train one weight vector per label (a single vector for binary tasks)
/// on the given node rows of `x`.
pub fn train_logreg(
    x: &DenseMatrix,
    labels: &LabelStore,
    rows: &[usize],
    params: &LogRegParams,
    seed: u64,
) -> Result<LogRegModel> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::data("logreg: no training rows"));
    }
    let standardizer = Standardizer::fit(x, rows)?;
    let task = labels.task();
    let n_vocab = labels.n_labels();
    let mut model = LogRegModel::zeroed(task, n_vocab, x.cols(), standardizer);

    let mut xs = DenseMatrix::zeros(rows.len(), x.cols());
    for (i, &node) in rows.iter().enumerate() {
        xs.row_mut(i)
            .copy_from_slice(&model.standardizer.transform_row(x.row(node)));
    }
    let y = target_matrix(labels, rows, task, n_vocab);

    let mut order: Vec<usize> = (0..rows.len()).collect();
    for epoch in 0..params.epochs {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, &[SALT_EPOCH, epoch as u64]));
        order.shuffle(&mut rng);
        for chunk in order.chunks(params.batch) {
            let mut xb = DenseMatrix::zeros(chunk.len(), xs.cols());
            let mut yb = DenseMatrix::zeros(chunk.len(), y.cols());
            for (i, &r) in chunk.iter().enumerate() {
                xb.row_mut(i).copy_from_slice(xs.row(r));
                yb.row_mut(i).copy_from_slice(y.row(r));
            }
            let (gw, gb) = batch_gradients(&model.weights, &model.bias, &xb, &yb, params.l2);
            for (w, g) in model.weights.data_mut().iter_mut().zip(gw.data()) {
                *w -= params.lr * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&gb) {
                *b -= params.lr * g;
            }
        }
    }
    if !model.is_finite() {
        return Err(Error::numeric("logreg: training diverged to non-finite weights"));
    }
    Ok(model)
}

/// Per-row, per-label probability matrix, always `n_vocab` columns.
pub fn logreg_predict_proba(model: &LogRegModel, x: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rows.len(), model.n_vocab);
    for (i, &node) in rows.iter().enumerate() {
        let xr = model.standardizer.transform_row(x.row(node));
        if model.task == TaskKind::Binary {
            let z: f64 = model
                .weights
                .row(0)
                .iter()
                .zip(&xr)
                .map(|(w, v)| w * v)
                .sum::<f64>()
                + model.bias[0];
            let p = sigmoid(z);
            out.set(i, 0, 1.0 - p);
            out.set(i, 1, p);
        } else {
            for l in 0..model.n_vocab {
                let z: f64 = model
                    .weights
                    .row(l)
                    .iter()
                    .zip(&xr)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + model.bias[l];
                out.set(i, l, sigmoid(z));
            }
        }
    }
    out
}

/// Differences the one-vs-rest batch loss (mean cross-entropy plus L2 on
/// weights) against `batch_gradients` on a fixed 3x2 problem. Returns the
/// max relative error.
#[doc(hidden)]
pub fn logreg_gradient_check() -> crate::Result<f64> {
    // loss recomputed from first principles inside the probe closure
    let xb = DenseMatrix::from_vec(3, 2, vec![0.5, -1.2, 0.3, 0.8, -0.7, 0.1])?;
    let yb = DenseMatrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0])?;
    let l2 = 0.01;
    let w0 = [0.3, -0.2, 0.1, 0.4];
    let b0 = [0.05, -0.1];
    let weights = DenseMatrix::from_vec(2, 2, w0.to_vec())?;
    let (gw, gb) = batch_gradients(&weights, &b0, &xb, &yb, l2);
    let grad: Vec<f64> = gw.data().iter().chain(&gb).copied().collect();
    let x0: Vec<f64> = w0.iter().chain(&b0).copied().collect();
    let loss = |p: &[f64]| {
        let (w, b) = p.split_at(4);
        let mut total = 0.0;
        for r in 0..3 {
            for l in 0..2 {
                let z: f64 = (0..2).map(|c| w[l * 2 + c] * xb.get(r, c)).sum::<f64>() + b[l];
                let pr = 1.0 / (1.0 + (-z).exp());
                let y = yb.get(r, l);
                total += -(y * pr.ln() + (1.0 - y) * (1.0 - pr).ln());
            }
        }
        total / 3.0 + l2 / 2.0 * w.iter().map(|v| v * v).sum::<f64>()
    };
    crate::numerics::max_relative_error(loss, &x0, &grad, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::argmax;

    fn store(task: TaskKind, vocab: &[&str], labels: Vec<Vec<u32>>) -> LabelStore {
        LabelStore::from_parts(
            task,
            vocab.iter().map(|s| s.to_string()).collect(),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn params_validated() {
        assert!(LogRegParams::default().validate().is_ok());
        assert!(LogRegParams { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(LogRegParams { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(LogRegParams { l2: -0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let err = logreg_gradient_check().unwrap();
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn zero_initialized_model_predicts_half_everywhere() {
        let x = DenseMatrix::from_vec(2, 2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let st = Standardizer::fit(&x, &[0, 1]).unwrap();
        let model = LogRegModel::zeroed(TaskKind::Multiclass, 3, 2, st);
        let p = logreg_predict_proba(&model, &x, &[0, 1]);
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(p.get(r, c), 0.5);
            }
        }
    }

    #[test]
    fn separable_toy_set_reaches_training_accuracy_one() {
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let jitter = (i as f64) * 0.03;
            data.extend_from_slice(&[-2.0 - jitter, 0.5 + jitter]);
            labels.push(vec![0]);
            data.extend_from_slice(&[2.0 + jitter, -0.5 - jitter]);
            labels.push(vec![1]);
        }
        let x = DenseMatrix::from_vec(40, 2, data).unwrap();
        let store = store(TaskKind::Binary, &["neg", "pos"], labels);
        let rows: Vec<usize> = (0..40).collect();
        let params = LogRegParams {
            l2: 1e-4,
            ..Default::default()
        };
        let model = train_logreg(&x, &store, &rows, &params, 0).unwrap();
        let p = logreg_predict_proba(&model, &x, &rows);
        let correct = rows
            .iter()
            .filter(|&&r| argmax(p.row(r)) as u32 == store.labels_of(r)[0])
            .count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn multiclass_argmax_matches_hand_computation() {
        // hand case: z = w.x + b for 3 classes at x = (1, 2) standardized
        // to itself (identity stats from symmetric fit rows)
        let x = DenseMatrix::from_vec(3, 2, vec![1.0, 2.0, -1.0, -2.0, 1.0, -2.0]).unwrap();
        let st = Standardizer::fit(&x, &[0, 1]).unwrap();
        let mut model = LogRegModel::zeroed(TaskKind::Multiclass, 3, 2, st);
        model
            .weights
            .data_mut()
            .copy_from_slice(&[0.5, -0.2, -0.3, 0.4, 0.1, 0.1]);
        model.bias = vec![0.0, 0.2, -0.5];
        // standardized x0 = (1, 1): z = (0.3, 0.3, -0.3); class 0 and 1
        // tie on z but sigma is strictly monotonic so scores tie too and
        // the lower index wins
        let p = logreg_predict_proba(&model, &x, &[0]);
        assert!((p.get(0, 0) - p.get(0, 1)).abs() <= 1e-12);
        assert_eq!(argmax(p.row(0)), 0);
        // perturb bias to break the tie toward class 1
        model.bias[1] = 0.3;
        let p = logreg_predict_proba(&model, &x, &[0]);
        assert_eq!(argmax(p.row(0)), 1);
    }

    #[test]
    fn probabilities_stay_in_unit_interval() {
        let x = DenseMatrix::from_vec(4, 3, (0..12).map(|i| i as f64 - 6.0).collect()).unwrap();
        let store = store(
            TaskKind::Multiclass,
            &["a", "b"],
            vec![vec![0], vec![1], vec![0], vec![1]],
        );
        let rows: Vec<usize> = (0..4).collect();
        let model = train_logreg(&x, &store, &rows, &Default::default(), 3).unwrap();
        let p = logreg_predict_proba(&model, &x, &rows);
        assert!(p.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn degenerate_single_class_column_still_trains() {
        let x = DenseMatrix::from_vec(4, 2, vec![0.1, 0.2, 0.4, 0.1, 0.9, 0.8, 0.3, 0.7]).unwrap();
        let store = store(
            TaskKind::Multiclass,
            &["a", "b", "c"],
            vec![vec![0], vec![0], vec![0], vec![0]],
        );
        let rows: Vec<usize> = (0..4).collect();
        let model = train_logreg(&x, &store, &rows, &Default::default(), 1).unwrap();
        assert!(model.is_finite());
        let p = logreg_predict_proba(&model, &x, &rows);
        for r in 0..4 {
            assert_eq!(argmax(p.row(r)), 0);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let x = DenseMatrix::from_vec(6, 2, (0..12).map(|i| (i * 7 % 5) as f64).collect()).unwrap();
        let store = store(
            TaskKind::Multiclass,
            &["a", "b"],
            vec![vec![0], vec![1], vec![0], vec![1], vec![0], vec![1]],
        );
        let rows: Vec<usize> = (0..6).collect();
        let m1 = train_logreg(&x, &store, &rows, &Default::default(), 5).unwrap();
        let m2 = train_logreg(&x, &store, &rows, &Default::default(), 5).unwrap();
        assert_eq!(m1.weights.data(), m2.weights.data());
        assert_eq!(m1.bias, m2.bias);
    }
}
