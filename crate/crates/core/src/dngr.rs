//! DNGR: random surfing to a visit-count matrix, PPMI transform, then a
//! stacked denoising autoencoder whose deepest hidden layer is the
//! embedding.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{transition_matrix, Graph};
use crate::numerics::{DenseMatrix, SparseMatrix};
use crate::seeds::derive_seed;

/// Nonnegative co-occurrence association matrix, N x N.
pub type PpmiMatrix = SparseMatrix;

#[derive(Debug, Clone)]
pub struct DngrParams {
    /// Output dimension; must equal the last hidden layer size.
    pub d: usize,
    /// Continue probability of the surf process.
    pub alpha: f64,
    /// Surf horizon.
    pub steps: usize,
    /// Hidden layer sizes, strictly decreasing, ending in d.
    pub layers: Vec<usize>,
    /// Masking noise rate in [0, 1).
    pub corruption: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    /// Stored-entry cap for the surf accumulation.
    pub nnz_budget: usize,
}

impl Default for DngrParams {
    fn default() -> Self {
        DngrParams {
            d: 128,
            alpha: 0.98,
            steps: 10,
            layers: vec![512, 128],
            corruption: 0.2,
            epochs: 50,
            lr: 0.1,
            batch: 64,
            seed: 0,
            nnz_budget: 50_000_000,
        }
    }
}

impl DngrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::data("dngr: alpha must lie in (0, 1]"));
        }
        if self.steps < 1 {
            return Err(Error::data("dngr: steps must be at least 1"));
        }
        if self.layers.is_empty() {
            return Err(Error::data("dngr: layers must be non-empty"));
        }
        if self.layers.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::data("dngr: layers must be strictly decreasing"));
        }
        if *self.layers.last().unwrap() != self.d {
            return Err(Error::data("dngr: last layer size must equal d"));
        }
        if self.layers.iter().any(|&h| h == 0) {
            return Err(Error::data("dngr: layer sizes must be positive"));
        }
        if !(0.0..1.0).contains(&self.corruption) {
            return Err(Error::data("dngr: corruption must lie in [0, 1)"));
        }
        if self.epochs < 1 || self.batch < 1 {
            return Err(Error::data("dngr: epochs and batch must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::data("dngr: lr must be positive"));
        }
        Ok(())
    }
}

const SALT_INIT: u64 = 30;
const SALT_SHUFFLE: u64 = 31;
const SALT_CORRUPT: u64 = 32;

/// Expected visit-count profiles M = sum over t of alpha^t A^t, rows are
/// source nodes, horizon `steps`.
pub fn random_surf(graph: &Graph, alpha: f64, steps: usize, nnz_budget: usize) -> Result<SparseMatrix> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::data("dngr: alpha must lie in (0, 1]"));
    }
    if steps < 1 {
        return Err(Error::data("dngr: steps must be at least 1"));
    }
    let a = transition_matrix(graph);
    let n = graph.n_nodes();
    let identity = SparseMatrix::from_rows(
        n,
        n,
        (0..n).map(|i| vec![(i as u32, 1.0)]).collect(),
    )
    .expect("identity is well-formed");

    let mut p = identity;
    let mut m: Option<SparseMatrix> = None;
    for t in 1..=steps {
        let budget_err = |_| {
            Error::data(format!(
                "dngr: surf step {t} exceeds the stored-entry budget of {nnz_budget}; reduce steps"
            ))
        };
        p = p.matmul(&a, nnz_budget).map_err(budget_err)?.map_values(|v| alpha * v);
        m = Some(match m {
            None => p.clone(),
            Some(acc) => acc.add(&p)?,
        });
        if m.as_ref().unwrap().nnz() > nnz_budget {
            return Err(Error::data(format!(
                "dngr: surf accumulation exceeds the stored-entry budget of {nnz_budget}; reduce steps"
            )));
        }
    }
    Ok(m.expect("steps >= 1"))
}

/// Positive pointwise mutual information of a nonnegative matrix:
/// max(log(m_ij * total / (rowsum_i * colsum_j)), 0). Zero entries stay
/// zero; results at or below zero are dropped from storage.
pub fn ppmi(m: &SparseMatrix) -> Result<PpmiMatrix> {
    let mut total = 0.0;
    for r in 0..m.rows() {
        let (_, vals) = m.row(r);
        for &v in vals {
            if v < 0.0 {
                return Err(Error::data("ppmi: input must be nonnegative"));
            }
            total += v;
        }
    }
    if total <= 0.0 {
        return Err(Error::data("ppmi: input has zero total mass"));
    }
    let row_sums = m.row_sums();
    let col_sums = m.col_sums();
    let mut entries: Vec<Vec<(u32, f64)>> = Vec::with_capacity(m.rows());
    for r in 0..m.rows() {
        let (cols, vals) = m.row(r);
        let mut row = Vec::new();
        for (&c, &v) in cols.iter().zip(vals) {
            if v > 0.0 {
                let x = (v * total / (row_sums[r] * col_sums[c as usize])).ln();
                if x > 0.0 {
                    row.push((c, x));
                }
            }
        }
        entries.push(row);
    }
    SparseMatrix::from_rows(m.rows(), m.cols(), entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Activation {
    Sigmoid,
    /// Identity output, used to validate the trainer against a
    /// least-squares oracle.
    #[cfg_attr(not(test), allow(dead_code))]
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activated output.
    fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }
}

/// One denoising autoencoder layer with untied encoder and decoder.
#[derive(Clone)]
pub(crate) struct Autoencoder {
    act: Activation,
    w1: DenseMatrix,
    b1: Vec<f64>,
    w2: DenseMatrix,
    b2: Vec<f64>,
}

impl Autoencoder {
    pub(crate) fn new(input_dim: usize, hidden_dim: usize, act: Activation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let mut w1 = DenseMatrix::zeros(input_dim, hidden_dim);
        for v in w1.data_mut() {
            *v = rng.gen_range(-scale1..scale1);
        }
        let mut w2 = DenseMatrix::zeros(hidden_dim, input_dim);
        for v in w2.data_mut() {
            *v = rng.gen_range(-scale1..scale1);
        }
        Autoencoder {
            act,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; input_dim],
        }
    }

    fn hidden(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut h = x.matmul(&self.w1);
        for r in 0..h.rows() {
            for (c, v) in h.row_mut(r).iter_mut().enumerate() {
                *v = self.act.apply(*v + self.b1[c]);
            }
        }
        h
    }

    fn reconstruct(&self, h: &DenseMatrix) -> DenseMatrix {
        let mut y = h.matmul(&self.w2);
        for r in 0..y.rows() {
            for (c, v) in y.row_mut(r).iter_mut().enumerate() {
                *v = self.act.apply(*v + self.b2[c]);
            }
        }
        y
    }

    /// Mean squared reconstruction error of corrupted input against the
    /// clean target.
    pub(crate) fn batch_loss(&self, corrupted: &DenseMatrix, clean: &DenseMatrix) -> f64 {
        let y = self.reconstruct(&self.hidden(corrupted));
        let n = (clean.rows() * clean.cols()) as f64;
        y.data()
            .iter()
            .zip(clean.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / n
    }

    /// One full gradient-descent step on a batch; returns the loss before
    /// the step.
    fn train_batch(&mut self, corrupted: &DenseMatrix, clean: &DenseMatrix, lr: f64) -> f64 {
        let (loss, gw1, gb1, gw2, gb2) = self.batch_gradients(corrupted, clean);
        for (w, g) in self.w1.data_mut().iter_mut().zip(gw1.data()) {
            *w -= lr * g;
        }
        for (b, g) in self.b1.iter_mut().zip(&gb1) {
            *b -= lr * g;
        }
        for (w, g) in self.w2.data_mut().iter_mut().zip(gw2.data()) {
            *w -= lr * g;
        }
        for (b, g) in self.b2.iter_mut().zip(&gb2) {
            *b -= lr * g;
        }
        loss
    }

    #[allow(clippy::type_complexity)]
    fn batch_gradients(
        &self,
        corrupted: &DenseMatrix,
        clean: &DenseMatrix,
    ) -> (f64, DenseMatrix, Vec<f64>, DenseMatrix, Vec<f64>) {
        let h = self.hidden(corrupted);
        let y = self.reconstruct(&h);
        let n = (clean.rows() * clean.cols()) as f64;

        let mut loss = 0.0;
        // dz2 = dL/dy * act'(y)
        let mut dz2 = DenseMatrix::zeros(y.rows(), y.cols());
        for r in 0..y.rows() {
            let yr = y.row(r);
            let cr = clean.row(r);
            let dr = dz2.row_mut(r);
            for c in 0..yr.len() {
                let diff = yr[c] - cr[c];
                loss += diff * diff;
                dr[c] = 2.0 * diff / n * self.act.deriv_from_output(yr[c]);
            }
        }
        loss /= n;

        let gw2 = h.matmul_at(&dz2);
        let gb2 = column_sums(&dz2);

        let mut dz1 = dz2.matmul_bt(&self.w2);
        for r in 0..dz1.rows() {
            let hr = h.row(r);
            let dr = dz1.row_mut(r);
            for c in 0..hr.len() {
                dr[c] *= self.act.deriv_from_output(hr[c]);
            }
        }
        let gw1 = corrupted.matmul_at(&dz1);
        let gb1 = column_sums(&dz1);

        (loss, gw1, gb1, gw2, gb2)
    }

    /// Flattened parameters in the order w1, b1, w2, b2.
    pub(crate) fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.w1.data());
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(self.w2.data());
        out.extend_from_slice(&self.b2);
        out
    }

    pub(crate) fn set_params_flat(&mut self, flat: &[f64]) {
        let (n1, nh) = (self.w1.rows() * self.w1.cols(), self.w1.cols());
        let n2 = n1;
        self.w1.data_mut().copy_from_slice(&flat[0..n1]);
        self.b1.copy_from_slice(&flat[n1..n1 + nh]);
        self.w2.data_mut().copy_from_slice(&flat[n1 + nh..n1 + nh + n2]);
        self.b2.copy_from_slice(&flat[n1 + nh + n2..]);
    }

    pub(crate) fn gradients_flat(&self, corrupted: &DenseMatrix, clean: &DenseMatrix) -> Vec<f64> {
        let (_, gw1, gb1, gw2, gb2) = self.batch_gradients(corrupted, clean);
        let mut out = Vec::new();
        out.extend_from_slice(gw1.data());
        out.extend_from_slice(&gb1);
        out.extend_from_slice(gw2.data());
        out.extend_from_slice(&gb2);
        out
    }
}

fn column_sums(m: &DenseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (c, &v) in m.row(r).iter().enumerate() {
            out[c] += v;
        }
    }
    out
}

/// Rows of the training input for one layer: sparse for the PPMI matrix,
/// dense for activations of earlier layers.
enum LayerInput<'a> {
    Sparse(&'a SparseMatrix),
    Dense(DenseMatrix),
}

impl LayerInput<'_> {
    fn n_rows(&self) -> usize {
        match self {
            LayerInput::Sparse(m) => m.rows(),
            LayerInput::Dense(m) => m.rows(),
        }
    }

    fn n_cols(&self) -> usize {
        match self {
            LayerInput::Sparse(m) => m.cols(),
            LayerInput::Dense(m) => m.cols(),
        }
    }

    fn fill_batch(&self, rows: &[usize], buf: &mut DenseMatrix) {
        for v in buf.data_mut() {
            *v = 0.0;
        }
        match self {
            LayerInput::Sparse(m) => {
                for (br, &r) in rows.iter().enumerate() {
                    let dst = buf.row_mut(br);
                    for (c, v) in m.iter_row(r) {
                        dst[c] = v;
                    }
                }
            }
            LayerInput::Dense(m) => {
                for (br, &r) in rows.iter().enumerate() {
                    buf.row_mut(br).copy_from_slice(m.row(r));
                }
            }
        }
    }

    /// All rows as a dense matrix, for clean forward passes.
    fn to_dense(&self) -> DenseMatrix {
        match self {
            LayerInput::Sparse(m) => m.to_dense(),
            LayerInput::Dense(m) => m.clone(),
        }
    }
}

/// Layer-wise pretraining of the stack; returns the embedding and the
/// per-layer, per-epoch mean batch losses.
pub(crate) fn sdae_train_with_history(
    x: &PpmiMatrix,
    params: &DngrParams,
    act: Activation,
) -> Result<(EmbeddingMatrix, Vec<Vec<f64>>)> {
    params.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(Error::data("dngr: empty input matrix"));
    }
    let mut input = LayerInput::Sparse(x);
    let mut history = Vec::with_capacity(params.layers.len());
    for (li, &hidden_dim) in params.layers.iter().enumerate() {
        let input_dim = input.n_cols();
        let mut ae = Autoencoder::new(
            input_dim,
            hidden_dim,
            act,
            derive_seed(params.seed, &[SALT_INIT, li as u64]),
        );
        let mut epoch_losses = Vec::with_capacity(params.epochs);
        let mut order: Vec<usize> = (0..input.n_rows()).collect();
        let mut batch_buf = DenseMatrix::zeros(params.batch, input_dim);
        let mut corrupt_buf = DenseMatrix::zeros(params.batch, input_dim);
        for epoch in 0..params.epochs {
            let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                params.seed,
                &[SALT_SHUFFLE, li as u64, epoch as u64],
            ));
            order.shuffle(&mut shuffle_rng);
            let mut corrupt_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                params.seed,
                &[SALT_CORRUPT, li as u64, epoch as u64],
            ));
            let mut sum = 0.0;
            let mut batches = 0usize;
            for chunk in order.chunks(params.batch) {
                let loss = if chunk.len() == params.batch {
                    input.fill_batch(chunk, &mut batch_buf);
                    corrupt(&batch_buf, &mut corrupt_buf, params.corruption, &mut corrupt_rng);
                    ae.train_batch(&corrupt_buf, &batch_buf, params.lr)
                } else {
                    // tail batch gets correctly shaped one-off buffers
                    let mut clean = DenseMatrix::zeros(chunk.len(), input_dim);
                    let mut corr = DenseMatrix::zeros(chunk.len(), input_dim);
                    input.fill_batch(chunk, &mut clean);
                    corrupt(&clean, &mut corr, params.corruption, &mut corrupt_rng);
                    ae.train_batch(&corr, &clean, params.lr)
                };
                if !loss.is_finite() {
                    return Err(Error::numeric(format!(
                        "dngr: non-finite loss at layer {li} epoch {epoch}; lower lr"
                    )));
                }
                sum += loss;
                batches += 1;
            }
            epoch_losses.push(sum / batches as f64);
        }
        history.push(epoch_losses);
        let clean_all = input.to_dense();
        input = LayerInput::Dense(ae.hidden(&clean_all));
    }
    let dense = input.to_dense();
    if !dense.is_finite() {
        return Err(Error::numeric("dngr: non-finite embedding"));
    }
    Ok((EmbeddingMatrix::from_dense(dense), history))
}

fn corrupt(clean: &DenseMatrix, out: &mut DenseMatrix, rate: f64, rng: &mut ChaCha8Rng) {
    out.data_mut().copy_from_slice(clean.data());
    if rate == 0.0 {
        return;
    }
    for v in out.data_mut() {
        if rng.gen::<f64>() < rate {
            *v = 0.0;
        }
    }
}

/// Stacked denoising autoencoder embedding of PPMI rows.
pub fn sdae_train(x: &PpmiMatrix, params: &DngrParams) -> Result<EmbeddingMatrix> {
    sdae_train_with_history(x, params, Activation::Sigmoid).map(|(e, _)| e)
}

/// DNGR embedding of the whole graph: surf, PPMI, then the autoencoder
/// stack.
pub fn dngr_embed(graph: &Graph, params: &DngrParams) -> Result<EmbeddingMatrix> {
    params.validate()?;
    let m = random_surf(graph, params.alpha, params.steps, params.nnz_budget)?;
    let x = ppmi(&m)?;
    sdae_train(&x, params)
}

/// Differences the backprop gradients of one sigmoid layer against the
/// reconstruction loss on a fixed 5x4 batch with two zeroed entries.
/// Returns the max relative error.
#[doc(hidden)]
pub fn autoencoder_gradient_check() -> Result<f64> {
    let clean = DenseMatrix::from_vec(
        5,
        4,
        vec![
            0.9, 0.1, 0.0, 0.4, //
            0.2, 0.8, 0.3, 0.0, //
            0.0, 0.5, 0.7, 0.6, //
            0.3, 0.0, 0.2, 0.9, //
            0.6, 0.4, 0.0, 0.1,
        ],
    )?;
    let mut corrupted = clean.clone();
    corrupted.set(0, 0, 0.0);
    corrupted.set(2, 3, 0.0);
    let ae = Autoencoder::new(4, 3, Activation::Sigmoid, 11);
    let x0 = ae.params_flat();
    let grad = ae.gradients_flat(&corrupted, &clean);
    let f = |flat: &[f64]| {
        let mut probe = ae.clone();
        probe.set_params_flat(flat);
        probe.batch_loss(&corrupted, &clean)
    };
    crate::numerics::max_relative_error(f, &x0, &grad, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{graph_from, two_cliques};

    #[test]
    fn params_validated() {
        let base = DngrParams::default();
        assert!(base.validate().is_ok());
        assert!(DngrParams { alpha: 0.0, ..base.clone() }.validate().is_err());
        assert!(DngrParams { alpha: 1.5, ..base.clone() }.validate().is_err());
        assert!(DngrParams { steps: 0, ..base.clone() }.validate().is_err());
        assert!(DngrParams { layers: vec![], ..base.clone() }.validate().is_err());
        assert!(DngrParams { layers: vec![128, 128], ..base.clone() }
            .validate()
            .is_err());
        assert!(DngrParams { layers: vec![64, 128], ..base.clone() }
            .validate()
            .is_err());
        assert!(DngrParams { layers: vec![512, 64], ..base.clone() }
            .validate()
            .is_err());
        assert!(DngrParams { corruption: 1.0, ..base.clone() }.validate().is_err());
        assert!(DngrParams { corruption: -0.1, ..base }.validate().is_err());
    }

    #[test]
    fn single_full_step_surf_equals_transition_matrix() {
        let g = graph_from("a b\nb c\nc a\nc d\n", false, false);
        let m = random_surf(&g, 1.0, 1, 1_000_000).unwrap();
        assert_eq!(m, transition_matrix(&g));
    }

    #[test]
    fn two_node_surf_matches_hand_chain() {
        // pair graph, alpha = 0.5: p1 = 0.5 A, p2 = 0.25 I
        let g = graph_from("a b\n", false, false);
        let m = random_surf(&g, 0.5, 2, 1_000_000).unwrap();
        assert!((m.get(0, 1) - 0.5).abs() <= 1e-15);
        assert!((m.get(1, 0) - 0.5).abs() <= 1e-15);
        assert!((m.get(0, 0) - 0.25).abs() <= 1e-15);
        assert!((m.get(1, 1) - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn surf_row_sums_bounded_by_geometric_series() {
        let g = two_cliques(5);
        let (alpha, steps) = (0.9, 4);
        let m = random_surf(&g, alpha, steps, 1_000_000).unwrap();
        let bound: f64 = (1..=steps).map(|t| alpha.powi(t as i32)).sum();
        for s in m.row_sums() {
            assert!(s <= bound + 1e-9, "row sum {s} over bound {bound}");
        }
    }

    #[test]
    fn surf_budget_error_advises_fewer_steps() {
        let g = two_cliques(8);
        let err = random_surf(&g, 0.98, 6, 30).unwrap_err().to_string();
        assert!(err.contains("reduce steps"), "message: {err}");
    }

    #[test]
    fn ppmi_of_uniform_matrix_is_all_zero() {
        let m = SparseMatrix::from_rows(
            2,
            2,
            vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]],
        )
        .unwrap();
        let p = ppmi(&m).unwrap();
        assert_eq!(p.nnz(), 0);
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(p.get(r, c), 0.0);
            }
        }
    }

    #[test]
    fn ppmi_diagonal_hand_value() {
        let m = SparseMatrix::from_rows(2, 2, vec![vec![(0, 2.0)], vec![(1, 2.0)]]).unwrap();
        let p = ppmi(&m).unwrap();
        assert!((p.get(0, 0) - 2.0f64.ln()).abs() <= 1e-15);
        assert!((p.get(1, 1) - 2.0f64.ln()).abs() <= 1e-15);
        assert_eq!(p.get(0, 1), 0.0);
        assert_eq!(p.get(1, 0), 0.0);
    }

    #[test]
    fn ppmi_is_scale_invariant() {
        let m = SparseMatrix::from_rows(
            3,
            3,
            vec![
                vec![(0, 0.2), (2, 1.7)],
                vec![(1, 3.0)],
                vec![(0, 0.4), (1, 0.9), (2, 2.2)],
            ],
        )
        .unwrap();
        let p1 = ppmi(&m).unwrap();
        let p10 = ppmi(&m.map_values(|v| v * 10.0)).unwrap();
        assert_eq!(p1.nnz(), p10.nnz());
        for r in 0..3 {
            for c in 0..3 {
                assert!((p1.get(r, c) - p10.get(r, c)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn ppmi_rejects_bad_input() {
        let zero = SparseMatrix::from_rows(2, 2, vec![vec![], vec![]]).unwrap();
        assert!(ppmi(&zero).is_err());
        let neg = SparseMatrix::from_rows(1, 1, vec![vec![(0, -1.0)]]).unwrap();
        assert!(ppmi(&neg).is_err());
    }

    #[test]
    fn autoencoder_gradient_matches_finite_differences() {
        let err = autoencoder_gradient_check().unwrap();
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn linear_layer_recovers_rank_one_input() {
        // rank-1 input through a 2-unit linear bottleneck: MSE must fall
        // below 1e-3
        let u = [0.8, 0.3, 0.5, 0.9, 0.2, 0.6, 0.4, 0.7];
        let v = [0.6, 0.9, 0.3, 0.5];
        let entries: Vec<Vec<(u32, f64)>> = u
            .iter()
            .map(|&a| v.iter().enumerate().map(|(j, &b)| (j as u32, a * b)).collect())
            .collect();
        let x = SparseMatrix::from_rows(8, 4, entries).unwrap();
        let params = DngrParams {
            d: 2,
            layers: vec![2],
            corruption: 0.0,
            epochs: 3000,
            lr: 0.3,
            batch: 8,
            seed: 1,
            ..DngrParams::default()
        };
        let (_, history) = sdae_train_with_history(&x, &params, Activation::Linear).unwrap();
        let final_loss = *history[0].last().unwrap();
        assert!(final_loss < 1e-3, "final loss {final_loss}");
    }

    #[test]
    fn identical_seeds_reproduce_bytes() {
        let g = two_cliques(5);
        let params = DngrParams {
            d: 3,
            layers: vec![5, 3],
            epochs: 4,
            steps: 3,
            batch: 4,
            seed: 9,
            ..DngrParams::default()
        };
        let e1 = dngr_embed(&g, &params).unwrap();
        let e2 = dngr_embed(&g, &params).unwrap();
        assert_eq!(e1.matrix().data(), e2.matrix().data());
        assert_eq!(e1.dim(), 3);
        assert_eq!(e1.n_nodes(), 10);
    }

    #[test]
    fn reconstruction_loss_trends_downward() {
        let g = two_cliques(6);
        let m = random_surf(&g, 0.98, 5, 1_000_000).unwrap();
        let x = ppmi(&m).unwrap();
        let params = DngrParams {
            d: 4,
            layers: vec![8, 4],
            corruption: 0.1,
            epochs: 15,
            lr: 0.1,
            batch: 4,
            seed: 2,
            ..DngrParams::default()
        };
        let (_, history) = sdae_train_with_history(&x, &params, Activation::Sigmoid).unwrap();
        for (li, losses) in history.iter().enumerate() {
            for w in losses.windows(2) {
                assert!(
                    w[1] <= w[0] * 1.05,
                    "layer {li}: epoch loss rose {} -> {}",
                    w[0],
                    w[1]
                );
            }
            assert!(
                losses.last().unwrap() < losses.first().unwrap(),
                "layer {li}: no downward trend {losses:?}"
            );
        }
    }

    #[test]
    fn exploding_loss_names_layer_and_epoch() {
        let u = [5.0, 3.0, 4.0, 6.0];
        let entries: Vec<Vec<(u32, f64)>> = u
            .iter()
            .map(|&a| (0..4).map(|j| (j as u32, a * (j + 1) as f64)).collect())
            .collect();
        let x = SparseMatrix::from_rows(4, 4, entries).unwrap();
        let params = DngrParams {
            d: 2,
            layers: vec![2],
            corruption: 0.0,
            epochs: 50,
            lr: 1e6,
            batch: 4,
            ..DngrParams::default()
        };
        let err = sdae_train_with_history(&x, &params, Activation::Linear)
            .unwrap_err()
            .to_string();
        assert!(err.contains("layer 0"), "message: {err}");
        assert!(err.contains("epoch"), "message: {err}");
    }

    #[test]
    fn embed_smoke_on_small_graph() {
        let g = two_cliques(5);
        let params = DngrParams {
            d: 3,
            layers: vec![6, 3],
            epochs: 5,
            steps: 4,
            batch: 5,
            ..DngrParams::default()
        };
        let emb = dngr_embed(&g, &params).unwrap();
        assert!(emb.matrix().is_finite());
        assert_eq!(emb.dim(), 3);
    }
}
