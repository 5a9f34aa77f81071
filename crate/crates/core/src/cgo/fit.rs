//! Log-log regression for decay rates.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares fit of `log y = slope log h + intercept`. Requires at least
/// five points spanning a decade in `h`.
pub fn decay_fit(h: &[f64], y: &[f64]) -> Result<DecayFit> {
    fit_loglog(h, y, 5, 10.0)
}

/// As [`decay_fit`] with explicit minimum point count and span.
pub fn fit_loglog(h: &[f64], y: &[f64], min_points: usize, min_span: f64) -> Result<DecayFit> {
    if h.len() != y.len() {
        return Err(Error::Invalid("h and values differ in length".into()));
    }
    if h.len() < min_points {
        return Err(Error::Invalid(format!("{} points, need at least {min_points}", h.len())));
    }
    if h.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("log-log fit needs positive finite data".into()));
    }
    let (lo, hi) = h.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    if hi / lo < min_span * (1.0 - 1e-9) {
        return Err(Error::Invalid(format!("h spans a factor {:.3}, need {min_span}", hi / lo)));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit { slope, intercept, r2, points: h.len() })
}

/// Ordinary least squares `y = a x + b`, returning `(a, b, R^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - (syy - a * sxy) / syy };
    (a, b, r2)
}

/// `n` log-spaced values from `lo` to `hi`, both included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}
