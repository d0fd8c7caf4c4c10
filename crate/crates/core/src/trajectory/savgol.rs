//! Savitzky-Golay smoothing.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Least-squares polynomial smoothing over a sliding window. Interior
/// points use the centered window; the first and last `window / 2` points
/// are evaluated on the polynomial fitted to the first (last) full window.
pub fn savitzky_golay(series: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>> {
    if window % 2 == 0 || window <= polyorder || series.len() < window {
        return Err(Error::Parameter(format!(
            "Savitzky-Golay needs an odd window > polyorder and at least window samples \
             (window {window}, polyorder {polyorder}, samples {})",
            series.len()
        )));
    }
    let hat = hat_matrix(window, polyorder);
    let half = window / 2;
    let n = series.len();
    let apply = |row: usize, start: usize| (0..window).map(|j| hat[(row, j)] * series[start + j]).sum::<f64>();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let value = if i < half {
            apply(i, 0)
        } else if i + half >= n {
            apply(window - (n - i), n - window)
        } else {
            apply(half, i - half)
        };
        out.push(value);
    }
    Ok(out)
}

/// Projection onto polynomials of degree <= polyorder sampled at the window
/// offsets; row k evaluates the fit at offset k.
fn hat_matrix(window: usize, polyorder: usize) -> DMatrix<f64> {
    let half = (window / 2) as f64;
    let scale = half.max(1.0);
    let vander = DMatrix::from_fn(window, polyorder + 1, |r, c| ((r as f64 - half) / scale).powi(c as i32));
    let q = vander.qr().q();
    &q * q.transpose()
}
