//! Per-feature standardization fitted on a training subset.

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Column-wise mean/std transform. Fitted statistics come from the rows
/// named at fit time so evaluation rows never leak into them.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

/// Features with standard deviation below this are centered but not scaled.
const MIN_STD: f64 = 1e-12;

impl Standardizer {
    pub fn fit(features: &DenseMatrix, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::data("standardize: no rows to fit on"));
        }
        let cols = features.cols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; cols];
        for &r in rows {
            for (m, &v) in mean.iter_mut().zip(features.row(r)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; cols];
        for &r in rows {
            for (j, &v) in features.row(r).iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < MIN_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn transform(&self, features: &DenseMatrix) -> DenseMatrix {
        let mut out = features.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| (v - self.mean[j]) / self.std[j])
            .collect()
    }
}
