//! Least-squares fits used by the experiments.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

fn fit_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Fit(msg.into()))
}

/// Ordinary least-squares line through `(x, y)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return fit_err("linear fit needs at least two paired samples");
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return fit_err("non-finite sample in linear fit");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return fit_err("degenerate abscissae");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Slope of `log magnitude` against `log distance`.
pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Result<f64> {
    decay_fit(samples).map(|f| f.slope)
}

/// Full log-log fit behind [`fit_decay_exponent`].
pub fn decay_fit(samples: &[(f64, f64)]) -> Result<LinearFit> {
    if samples.len() < 8 {
        return fit_err(format!("decay fit needs >= 8 samples, got {}", samples.len()));
    }
    if samples.iter().any(|&(d, m)| !(d > 0.0 && m > 0.0 && d.is_finite() && m.is_finite())) {
        return fit_err("decay fit needs positive finite distances and magnitudes");
    }
    let dmin = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let dmax = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if dmax / dmin < 8.0 {
        return fit_err(format!("decay fit distance ratio {} < 8", dmax / dmin));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    linear_fit(&xs, &ys)
}

/// Coefficients of `y ≈ Σ c_j φ_j(x)` in the least-squares sense.
pub fn basis_fit(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<Vec<f64>> {
    let m = basis.len();
    if xs.len() != ys.len() || xs.len() < m || m == 0 {
        return fit_err("basis fit needs at least as many samples as basis functions");
    }
    let a = Mat::<f64>::from_fn(xs.len(), m, |i, j| basis[j](xs[i]));
    let b = Mat::<f64>::from_fn(ys.len(), 1, |i, _| ys[i]);
    let x = a.qr().solve_lstsq(&b);
    let c: Vec<f64> = (0..m).map(|j| x[(j, 0)]).collect();
    if c.iter().any(|v| !v.is_finite()) {
        return fit_err("singular basis fit");
    }
    Ok(c)
}

/// Aitken Δ² extrapolation of three successive values.
pub fn aitken(a: f64, b: f64, c: f64) -> f64 {
    let den = (c - b) - (b - a);
    if den.abs() <= 1e-300 || !den.is_finite() {
        return c;
    }
    c - (c - b) * (c - b) / den
}
