//! Weighted straight-line least squares.

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    /// χ² per degree of freedom; 1 for consistent data with honest errors.
    pub reduced_chi2: f64,
}

/// Fits y = a + b x with weights 1/σ² (unit weights when `sigma` is None).
///
/// Parameter errors are scaled by √χ²_ν when χ²_ν > 1.
pub fn fit_line(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> CliResult<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(CliError::Usage(format!("line fit needs >= 3 matched points, got {n}")));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|v| 1.0 / (v * v).max(1e-300)).collect(),
        None => vec![1.0; n],
    };
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) || !det.is_finite() {
        return Err(CliError::NonConvergence("degenerate line fit".into()));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    let chi2: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let red = chi2 / (n - 2) as f64;
    let scale = if sigma.is_some() { red.max(1.0) } else { red };
    Ok(LineFit {
        intercept,
        slope,
        intercept_se: (scale * sxx / det).sqrt(),
        slope_se: (scale * sw / det).sqrt(),
        reduced_chi2: red,
    })
}
