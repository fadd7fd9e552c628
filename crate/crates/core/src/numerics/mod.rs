//! Dense/sparse linear algebra, truncated SVD, and numeric test helpers.

mod dense;
mod finitediff;
mod sparse;
mod standardize;
mod svd;

pub use dense::DenseMatrix;
pub use finitediff::max_relative_error;
pub use sparse::SparseMatrix;
pub use standardize::Standardizer;
pub use svd::{truncated_svd, TruncatedSvd};

/// Plain decimal rendering of `x` to the given significant digits,
/// without scientific notation.
pub fn format_sig(x: f64, digits: u32) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1) as i32;
    let mag = x.abs().log10().floor() as i32;
    let prec = (digits - 1 - mag).max(0) as usize;
    let s = format!("{x:.prec$}");
    // rounding can carry into a new magnitude (0.99999 -> 1.0000)
    let rounded: f64 = s.parse().unwrap_or(x);
    let mag2 = if rounded == 0.0 {
        mag
    } else {
        rounded.abs().log10().floor() as i32
    };
    if mag2 == mag {
        s
    } else {
        let prec2 = (digits - 1 - mag2).max(0) as usize;
        format!("{x:.prec2$}")
    }
}
