//! Small regression and extrapolation helpers, always in double precision.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Ordinary least squares for `y ~ columns * coef`.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let rows = y.len();
    let cols = columns.len();
    if rows < cols || cols == 0 {
        return Err(Error::Fit(format!("{rows} samples for {cols} coefficients")));
    }
    // Columns are rescaled to unit norm so widely different magnitudes stay well conditioned.
    let scales: Vec<f64> =
        columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)).collect();
    let a = DMatrix::from_fn(rows, cols, |i, j| columns[j][i] / scales[j]);
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-14).map_err(|e| Error::Fit(format!("least squares failed: {e}")))?;
    Ok(sol.iter().zip(&scales).map(|(c, s)| c / s).collect())
}

/// Straight line fit returning `(slope, intercept, max |residual|)`.
pub(crate) fn line_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let ones = vec![1.0; x.len()];
    let coef = least_squares(&[x.to_vec(), ones], y)?;
    let max_res = x.iter().zip(y).map(|(xi, yi)| (yi - coef[0] * xi - coef[1]).abs()).fold(0.0, f64::max);
    Ok((coef[0], coef[1], max_res))
}

/// Value at zero of the interpolating polynomial through `(h_i, v_i)`.
pub(crate) fn extrapolate_to_zero(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

/// `count` log-spaced points covering `[lo, hi]`.
pub(crate) fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else if i == 0 {
                lo
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}
