//! Row-major dense matrix with the handful of products the rest of the
//! crate needs. Not a BLAS; loops are ordered for cache locality and the
//! row-parallel paths are bitwise deterministic regardless of thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::data(format!(
                "dense matrix: {} values for {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("dense matrix: non-finite entry"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self * other`, parallel over output rows.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        let oc = other.cols;
        out.data
            .par_chunks_mut(oc)
            .zip(self.data.par_chunks(self.cols))
            .for_each(|(out_row, a_row)| {
                for (k, &a) in a_row.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let b_row = &other.data[k * oc..(k + 1) * oc];
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o += a * b;
                    }
                }
            });
        out
    }

    /// `self^T * other`; both operands are indexed by the same row count.
    pub fn matmul_at(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "matmul_at shape mismatch");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        let oc = other.cols;
        for k in 0..self.rows {
            let a_row = &self.data[k * self.cols..(k + 1) * self.cols];
            let b_row = &other.data[k * oc..(k + 1) * oc];
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * oc..(i + 1) * oc];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other^T`, parallel over output rows.
    pub fn matmul_bt(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_bt shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        let oc = other.rows;
        out.data
            .par_chunks_mut(oc)
            .zip(self.data.par_chunks(self.cols))
            .for_each(|(out_row, a_row)| {
                for (j, o) in out_row.iter_mut().enumerate() {
                    let b_row = &other.data[j * other.cols..(j + 1) * other.cols];
                    let mut acc = 0.0;
                    for (&a, &b) in a_row.iter().zip(b_row) {
                        acc += a * b;
                    }
                    *o = acc;
                }
            });
        out
    }

    /// Column-concatenation of `parts` (all must share a row count).
    pub fn hconcat(parts: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let rows = parts
            .first()
            .ok_or_else(|| Error::data("hconcat of zero matrices"))?
            .rows;
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::data("hconcat: row count mismatch"));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = DenseMatrix::zeros(rows, cols);
        for r in 0..rows {
            let mut at = 0;
            let out_row = &mut out.data[r * cols..(r + 1) * cols];
            for p in parts {
                out_row[at..at + p.cols].copy_from_slice(p.row(r));
                at += p.cols;
            }
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_at_matches_explicit_transpose() {
        let a = DenseMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(a.matmul_at(&b).data(), a.transpose().matmul(&b).data());
    }

    #[test]
    fn matmul_bt_matches_explicit_transpose() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::from_vec(2, 3, vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(a.matmul_bt(&b).data(), a.matmul(&b.transpose()).data());
    }

    #[test]
    fn hconcat_layout() {
        let a = DenseMatrix::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        let b = DenseMatrix::from_vec(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = DenseMatrix::hconcat(&[&a, &b]).unwrap();
        assert_eq!(c.row(0), &[1.0, 3.0, 4.0]);
        assert_eq!(c.row(1), &[2.0, 5.0, 6.0]);
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
    }
}
