//! Randomized truncated SVD: Gaussian sketch, QR range finding, power
//! iterations, then an exact decomposition of the small projected matrix.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::StandardNormal;

use super::dense::DenseMatrix;
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Left factor with orthonormal columns, `rows x rank`.
    pub u: DenseMatrix,
    /// Singular values, non-increasing.
    pub singular_values: Vec<f64>,
    /// Right factor, `rank x cols`.
    pub vt: DenseMatrix,
}

/// Rank-`rank` approximate SVD of a sparse matrix.
///
/// Deterministic for a fixed seed: the Gaussian test matrix is the only
/// random input and the downstream factorizations are exact.
pub fn truncated_svd(
    m: &SparseMatrix,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<TruncatedSvd> {
    let min_dim = m.rows().min(m.cols());
    if rank == 0 {
        return Err(Error::data("truncated_svd: rank must be at least 1"));
    }
    if rank > min_dim {
        return Err(Error::data(format!(
            "truncated_svd: rank {rank} exceeds min dimension {min_dim}"
        )));
    }
    let sketch = (rank + oversample).min(min_dim);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = DenseMatrix::zeros(m.cols(), sketch);
    for v in omega.data_mut() {
        *v = rng.sample(StandardNormal);
    }

    let mt = m.transpose();
    let mut q = orthonormalize(&m.mul_dense(&omega));
    for _ in 0..power_iters {
        let z = orthonormalize(&mt.mul_dense(&q));
        q = orthonormalize(&m.mul_dense(&z));
    }

    // B = Q^T M, computed through M^T Q to stay row-major friendly.
    let b = mt.mul_dense(&q).transpose();

    let b_na = to_nalgebra(&b);
    let svd = b_na.svd(true, true);
    let u_b = svd.u.ok_or_else(|| Error::numeric("svd: no left factor"))?;
    let v_t = svd.v_t.ok_or_else(|| Error::numeric("svd: no right factor"))?;

    // nalgebra orders singular values, but make the contract explicit.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });
    let order = &order[..rank];

    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut u_small = DenseMatrix::zeros(b.rows(), rank);
    for r in 0..b.rows() {
        for (j, &i) in order.iter().enumerate() {
            u_small.set(r, j, u_b[(r, i)]);
        }
    }
    let mut vt = DenseMatrix::zeros(rank, m.cols());
    for (j, &i) in order.iter().enumerate() {
        for c in 0..m.cols() {
            vt.set(j, c, v_t[(i, c)]);
        }
    }

    let u = q.matmul(&u_small);
    if !u.is_finite() || singular_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::numeric("svd: non-finite factor"));
    }
    Ok(TruncatedSvd {
        u,
        singular_values,
        vt,
    })
}

/// Orthonormal basis for the columns of `m` via Householder QR.
fn orthonormalize(m: &DenseMatrix) -> DenseMatrix {
    let qr = to_nalgebra(m).qr();
    from_nalgebra(&qr.q())
}

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_iterator(m.rows(), m.cols(), m.data().iter().copied())
}

fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.set(r, c, m[(r, c)]);
        }
    }
    out
}
