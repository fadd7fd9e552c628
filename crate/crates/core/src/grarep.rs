//! GraRep: per-step factors of positive-log-transformed powers of the
//! transition matrix, concatenated across steps.

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{transition_matrix, Graph};
use crate::numerics::{truncated_svd, DenseMatrix, SparseMatrix};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    /// Shift of 1/N, N the node count.
    OneOverN,
    Custom(f64),
}

#[derive(Debug, Clone)]
pub struct GraRepParams {
    /// Total output dimension across all steps.
    pub d: usize,
    /// Highest transition power factorized.
    pub k_max: usize,
    pub beta: BetaMode,
    /// Stored-entry cap for transition powers; chained products past this
    /// densify and are refused.
    pub nnz_budget: usize,
    pub seed: u64,
}

impl Default for GraRepParams {
    fn default() -> Self {
        GraRepParams {
            d: 128,
            k_max: 4,
            beta: BetaMode::OneOverN,
            nnz_budget: 50_000_000,
            seed: 0,
        }
    }
}

impl GraRepParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::data("grarep: k_max must be at least 1"));
        }
        if self.d < self.k_max {
            return Err(Error::data(
                "grarep: d must be at least k_max so every step gets a dimension",
            ));
        }
        if let BetaMode::Custom(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::data("grarep: custom beta must be positive and finite"));
            }
        }
        if self.nnz_budget < 1 {
            return Err(Error::data("grarep: nnz_budget must be at least 1"));
        }
        Ok(())
    }
}

const SALT_STEP: u64 = 20;
const OVERSAMPLE: usize = 10;
const POWER_ITERS: usize = 2;

/// Output dimensions per step: floor(d / k_max) each, remainder to the
/// lowest steps.
pub(crate) fn step_dims(d: usize, k_max: usize) -> Vec<usize> {
    let base = d / k_max;
    let rem = d % k_max;
    (0..k_max).map(|k| base + usize::from(k < rem)).collect()
}

/// Entrywise max(log(a_ij / tau_j) - log(beta), 0) over stored entries,
/// with tau_j the mean mass of column j. Non-positive results are dropped.
pub(crate) fn positive_log_transform(a: &SparseMatrix, beta: f64) -> SparseMatrix {
    let n = a.rows();
    let log_tau: Vec<f64> = a.col_sums().iter().map(|s| (s / n as f64).ln()).collect();
    let log_beta = beta.ln();
    let mut entries: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    for r in 0..n {
        let (cols, vals) = a.row(r);
        let mut row = Vec::new();
        for (&c, &v) in cols.iter().zip(vals) {
            let x = v.ln() - log_tau[c as usize] - log_beta;
            if x > 0.0 {
                row.push((c, x));
            }
        }
        entries.push(row);
    }
    SparseMatrix::from_rows(n, a.cols(), entries).expect("transform preserves shape")
}

/// Scale column c of `u` by sqrt(s[c]).
fn scale_columns_by_sqrt(u: &mut DenseMatrix, s: &[f64]) {
    for r in 0..u.rows() {
        let row = u.row_mut(r);
        for (c, v) in row.iter_mut().enumerate() {
            *v *= s[c].sqrt();
        }
    }
}

/// Divide each column by its population standard deviation. Constant
/// columns are left as they are.
fn normalize_column_variance(m: &mut DenseMatrix) {
    let (rows, cols) = (m.rows(), m.cols());
    let mut mean = vec![0.0; cols];
    let mut sq = vec![0.0; cols];
    for r in 0..rows {
        for (c, &v) in m.row(r).iter().enumerate() {
            mean[c] += v;
            sq[c] += v * v;
        }
    }
    let inv_n = 1.0 / rows as f64;
    let std: Vec<f64> = mean
        .iter()
        .zip(&sq)
        .map(|(&m1, &m2)| {
            let var = (m2 * inv_n - (m1 * inv_n).powi(2)).max(0.0);
            var.sqrt()
        })
        .collect();
    for r in 0..rows {
        let row = m.row_mut(r);
        for (c, v) in row.iter_mut().enumerate() {
            if std[c] >= 1e-12 {
                *v /= std[c];
            }
        }
    }
}

/// GraRep embedding of the whole graph.
pub fn grarep_embed(graph: &Graph, params: &GraRepParams) -> Result<EmbeddingMatrix> {
    params.validate()?;
    let n = graph.n_nodes();
    let a = transition_matrix(graph);
    let beta = match params.beta {
        BetaMode::OneOverN => 1.0 / n as f64,
        BetaMode::Custom(b) => b,
    };
    let dims = step_dims(params.d, params.k_max);
    let mut blocks: Vec<DenseMatrix> = Vec::with_capacity(dims.len());
    let mut power = a.clone();
    for (idx, &dk) in dims.iter().enumerate() {
        let k = idx + 1;
        if k > 1 {
            power = power.matmul(&a, params.nnz_budget).map_err(|_| {
                Error::data(format!(
                    "grarep: A^{k} exceeds the stored-entry budget of {}; reduce k_max",
                    params.nnz_budget
                ))
            })?;
        }
        let x = positive_log_transform(&power, beta);
        if x.nnz() == 0 {
            return Err(Error::data(format!(
                "grarep: step {k} has no positive entries after the log transform; lower beta"
            )));
        }
        let svd = truncated_svd(
            &x,
            dk,
            OVERSAMPLE,
            POWER_ITERS,
            derive_seed(params.seed, &[SALT_STEP, k as u64]),
        )
        .map_err(|e| Error::data(format!("grarep: step {k} factorization failed: {e}")))?;
        let mut w = svd.u;
        scale_columns_by_sqrt(&mut w, &svd.singular_values);
        normalize_column_variance(&mut w);
        blocks.push(w);
    }
    let refs: Vec<&DenseMatrix> = blocks.iter().collect();
    let dense = DenseMatrix::hconcat(&refs)?;
    if !dense.is_finite() {
        return Err(Error::numeric("grarep: non-finite embedding"));
    }
    Ok(EmbeddingMatrix::from_dense(dense))
}
