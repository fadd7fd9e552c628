//! Central-difference gradient checking for training objectives.

use crate::error::{Error, Result};

/// Largest relative disagreement between `grad` and a central-difference
/// estimate of `f`'s gradient at `x`.
///
/// Relative error per coordinate is |g - g_fd| / max(1, |g|, |g_fd|), so
/// near-zero gradients are compared absolutely.
pub fn max_relative_error<F>(mut f: F, x: &[f64], grad: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if x.len() != grad.len() {
        return Err(Error::data(format!(
            "gradient check: {} parameters but {} gradient entries",
            x.len(),
            grad.len()
        )));
    }
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let hi = f(&probe);
        probe[i] = x[i] - step;
        let lo = f(&probe);
        probe[i] = x[i];
        if !hi.is_finite() || !lo.is_finite() {
            return Err(Error::numeric(format!(
                "gradient check: objective non-finite near coordinate {i}"
            )));
        }
        let fd = (hi - lo) / (2.0 * step);
        let denom = 1.0f64.max(grad[i].abs()).max(fd.abs());
        worst = worst.max((grad[i] - fd).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_matches() {
        // f(x) = sum x_i^2, grad = 2x
        let x = vec![1.0, -2.0, 0.5];
        let grad: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let err = max_relative_error(|p| p.iter().map(|v| v * v).sum(), &x, &grad, 1e-5).unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn wrong_gradient_detected() {
        let x = vec![1.0, 2.0];
        let grad = vec![2.0, 100.0];
        let err = max_relative_error(|p| p.iter().map(|v| v * v).sum(), &x, &grad, 1e-5).unwrap();
        assert!(err > 0.5);
    }

    #[test]
    fn non_finite_objective_rejected() {
        let x = vec![0.0];
        let grad = vec![0.0];
        assert!(max_relative_error(|p| p[0].ln(), &x, &grad, 1e-5).is_err());
    }
}
