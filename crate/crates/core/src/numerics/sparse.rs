//! CSR sparse matrix: column indices are strictly increasing within each
//! row and all values are finite. Products that can blow up in size take an
//! nnz budget and fail loudly instead of exhausting memory.

use rayon::prelude::*;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        col_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != rows + 1 || offsets[0] != 0 || offsets[rows] != col_idx.len() {
            return Err(Error::data("csr: bad offsets"));
        }
        if col_idx.len() != values.len() {
            return Err(Error::data("csr: col/value length mismatch"));
        }
        for r in 0..rows {
            if offsets[r] > offsets[r + 1] {
                return Err(Error::data("csr: offsets not non-decreasing"));
            }
            let cs = &col_idx[offsets[r]..offsets[r + 1]];
            if cs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::data(format!("csr: row {r} columns not strictly increasing")));
            }
            if cs.last().is_some_and(|&c| c as usize >= cols) {
                return Err(Error::data(format!("csr: row {r} column out of range")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("csr: non-finite value"));
        }
        Ok(SparseMatrix {
            rows,
            cols,
            offsets,
            col_idx,
            values,
        })
    }

    /// Build from per-row `(col, value)` lists; entries within a row are
    /// sorted and duplicates summed.
    pub fn from_rows(rows: usize, cols: usize, mut row_entries: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        if row_entries.len() != rows {
            return Err(Error::data("from_rows: row count mismatch"));
        }
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for entries in row_entries.iter_mut() {
            entries.sort_unstable_by_key(|e| e.0);
            let mut i = 0;
            while i < entries.len() {
                let c = entries[i].0;
                let mut v = entries[i].1;
                let mut j = i + 1;
                while j < entries.len() && entries[j].0 == c {
                    v += entries[j].1;
                    j += 1;
                }
                col_idx.push(c);
                values.push(v);
                i = j;
            }
            offsets.push(col_idx.len());
        }
        SparseMatrix::new(rows, cols, offsets, col_idx, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.offsets[r], self.offsets[r + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn iter_row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (cs, vs) = self.row(r);
        cs.iter().zip(vs).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cs, vs) = self.row(r);
        match cs.binary_search(&(c as u32)) {
            Ok(i) => vs[i],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).1.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (c, v) in self.col_idx.iter().zip(&self.values) {
            out[*c as usize] += v;
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols];
        for &c in &self.col_idx {
            counts[c as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(self.cols + 1);
        offsets.push(0);
        for c in 0..self.cols {
            offsets.push(offsets[c] + counts[c]);
        }
        let mut cursor = offsets.clone();
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            for (c, v) in self.iter_row(r) {
                let at = cursor[c];
                col_idx[at] = r as u32;
                values[at] = v;
                cursor[c] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            offsets,
            col_idx,
            values,
        }
    }

    /// Map every stored value through `f`, keeping the pattern.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = f(*v);
        }
        out
    }

    /// Drop stored entries for which `keep` is false.
    pub fn filter(&self, keep: impl Fn(usize, usize, f64) -> bool) -> SparseMatrix {
        let mut rows_out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            rows_out.push(
                self.iter_row(r)
                    .filter(|&(c, v)| keep(r, c, v))
                    .map(|(c, v)| (c as u32, v))
                    .collect(),
            );
        }
        SparseMatrix::from_rows(self.rows, self.cols, rows_out).expect("filter preserves validity")
    }

    /// Sparse-sparse product with an nnz budget.
    pub fn matmul(&self, other: &SparseMatrix, nnz_budget: usize) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::data("sparse matmul: shape mismatch"));
        }
        let rows_out: Vec<Vec<(u32, f64)>> = (0..self.rows)
            .into_par_iter()
            .map(|r| {
                let mut acc: Vec<f64> = vec![0.0; other.cols];
                let mut touched: Vec<u32> = Vec::new();
                for (k, v) in self.iter_row(r) {
                    for (c, w) in other.iter_row(k) {
                        if acc[c] == 0.0 {
                            touched.push(c as u32);
                        }
                        acc[c] += v * w;
                    }
                }
                touched.sort_unstable();
                touched
                    .into_iter()
                    .filter(|&c| acc[c as usize] != 0.0)
                    .map(|c| (c, acc[c as usize]))
                    .collect()
            })
            .collect();
        let total: usize = rows_out.iter().map(|r| r.len()).sum();
        if total > nnz_budget {
            return Err(Error::numeric(format!(
                "sparse product has {total} nonzeros, over the budget of {nnz_budget}"
            )));
        }
        SparseMatrix::from_rows(self.rows, other.cols, rows_out)
    }

    /// `self * dense`, parallel over output rows.
    pub fn mul_dense(&self, m: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, m.rows(), "mul_dense shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, m.cols());
        let oc = m.cols();
        out.data_mut()
            .par_chunks_mut(oc)
            .enumerate()
            .for_each(|(r, out_row)| {
                for (k, v) in self.iter_row(r) {
                    let src = m.row(k);
                    for (o, &s) in out_row.iter_mut().zip(src) {
                        *o += v * s;
                    }
                }
            });
        out
    }

    /// Entry-wise sum of two matrices with the same shape.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::data("sparse add: shape mismatch"));
        }
        let rows_out: Vec<Vec<(u32, f64)>> = (0..self.rows)
            .map(|r| {
                let mut entries: Vec<(u32, f64)> = self
                    .iter_row(r)
                    .map(|(c, v)| (c as u32, v))
                    .collect();
                entries.extend(other.iter_row(r).map(|(c, v)| (c as u32, v)));
                entries
            })
            .collect();
        SparseMatrix::from_rows(self.rows, self.cols, rows_out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.iter_row(r) {
                out.set(r, c, v);
            }
        }
        out
    }
}
