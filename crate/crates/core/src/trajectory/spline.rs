//! Natural cubic splines: interpolating and penalized smoothing fits.
//!
//! The smoothing fit minimizes `sum w_i (y_i - g(t_i))^2 + alpha * int g''^2`
//! using the Reinsch banded formulation, so it runs in linear time.

use crate::{Error, Result};

/// Natural cubic spline stored as knot values and second derivatives.
/// Evaluation outside the knot range continues linearly.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn interpolate(knots: &[f64], values: &[f64]) -> Result<Self> {
        Self::smoothing(knots, values, None, 0.0)
    }

    /// Penalized fit with raw roughness weight `alpha` (units follow the
    /// knot parameter). `weights` default to one.
    pub fn smoothing(knots: &[f64], values: &[f64], weights: Option<&[f64]>, alpha: f64) -> Result<Self> {
        let n = knots.len();
        if n == 0 || values.len() != n || weights.is_some_and(|w| w.len() != n) {
            return Err(Error::Parameter(format!(
                "spline needs matching non-empty knots and values ({} vs {})",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("spline knots must be strictly increasing".into()));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Parameter(format!("smoothing weight {alpha} must be non-negative")));
        }
        if let Some(w) = weights {
            if w.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Parameter("spline weights must be positive".into()));
            }
        }
        if n < 3 {
            // the fit is the weighted least-squares line, which for n <= 2 interpolates
            return Ok(CubicSpline { knots: knots.to_vec(), values: values.to_vec(), second: vec![0.0; n] });
        }

        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let m = n - 2;
        let inv_w = |i: usize| weights.map_or(1.0, |w| 1.0 / w[i]);
        // column j of Q touches rows j, j+1, j+2
        let q = |j: usize| [1.0 / h[j], -1.0 / h[j] - 1.0 / h[j + 1], 1.0 / h[j + 1]];

        // symmetric pentadiagonal A = R + alpha Q^T W^-1 Q, stored as three diagonals
        let mut d0 = vec![0.0; m];
        let mut d1 = vec![0.0; m];
        let mut d2 = vec![0.0; m];
        for j in 0..m {
            let qj = q(j);
            d0[j] = (h[j] + h[j + 1]) / 3.0
                + alpha * (0..3).map(|r| qj[r] * qj[r] * inv_w(j + r)).sum::<f64>();
            if j + 1 < m {
                let qk = q(j + 1);
                d1[j] = h[j + 1] / 6.0 + alpha * (qj[1] * qk[0] * inv_w(j + 1) + qj[2] * qk[1] * inv_w(j + 2));
            }
            if j + 2 < m {
                let qk = q(j + 2);
                d2[j] = alpha * qj[2] * qk[0] * inv_w(j + 2);
            }
        }
        let rhs: Vec<f64> = (0..m)
            .map(|j| {
                let qj = q(j);
                qj[0] * values[j] + qj[1] * values[j + 1] + qj[2] * values[j + 2]
            })
            .collect();
        let gamma = solve_pentadiagonal(&d0, &d1, &d2, rhs)?;

        let mut fitted = values.to_vec();
        if alpha > 0.0 {
            for (j, g) in gamma.iter().enumerate() {
                let qj = q(j);
                for r in 0..3 {
                    fitted[j + r] -= alpha * inv_w(j + r) * qj[r] * g;
                }
            }
        }
        let mut second = vec![0.0; n];
        second[1..n - 1].copy_from_slice(&gamma);
        Ok(CubicSpline { knots: knots.to_vec(), values: fitted, second })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Spline values at the knots.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if n == 1 {
            return self.values[0];
        }
        let (lo, hi) = self.domain();
        if t < lo {
            return self.values[0] + (t - lo) * self.derivative(lo);
        }
        if t > hi {
            return self.values[n - 1] + (t - hi) * self.derivative(hi);
        }
        let i = self.segment(t);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if n == 1 {
            return 0.0;
        }
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let i = self.segment(t);
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        (self.values[i + 1] - self.values[i]) / h
            + ((1.0 - 3.0 * a * a) * self.second[i] + (3.0 * b * b - 1.0) * self.second[i + 1]) * h / 6.0
    }
}

/// Banded LDL^T solve for a symmetric positive definite matrix with main
/// diagonal `d0` and off-diagonals `d1`, `d2`.
fn solve_pentadiagonal(d0: &[f64], d1: &[f64], d2: &[f64], mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let m = d0.len();
    let mut d = vec![0.0; m];
    let mut l1 = vec![0.0; m];
    let mut l2 = vec![0.0; m];
    for i in 0..m {
        let mut di = d0[i];
        if i >= 1 {
            di -= l1[i - 1] * l1[i - 1] * d[i - 1];
        }
        if i >= 2 {
            di -= l2[i - 2] * l2[i - 2] * d[i - 2];
        }
        if !(di > 0.0) {
            return Err(Error::Degenerate("smoothing system is not positive definite".into()));
        }
        d[i] = di;
        if i + 1 < m {
            let mut v = d1[i];
            if i >= 1 {
                v -= l1[i - 1] * l2[i - 1] * d[i - 1];
            }
            l1[i] = v / di;
        }
        if i + 2 < m {
            l2[i] = d2[i] / di;
        }
    }
    for i in 0..m {
        if i >= 1 {
            rhs[i] -= l1[i - 1] * rhs[i - 1];
        }
        if i >= 2 {
            rhs[i] -= l2[i - 2] * rhs[i - 2];
        }
    }
    for (r, di) in rhs.iter_mut().zip(&d) {
        *r /= di;
    }
    for i in (0..m).rev() {
        if i + 1 < m {
            rhs[i] -= l1[i] * rhs[i + 1];
        }
        if i + 2 < m {
            rhs[i] -= l2[i] * rhs[i + 2];
        }
    }
    Ok(rhs)
}
