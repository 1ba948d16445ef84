//! Ordinary least squares on (x, y) and on (log t, log y).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through (x, y). R² is reported as 1 when y is constant
/// (zero total variance), since the line then fits exactly.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateFit { usable: x.len().min(y.len()), needed: 2 });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit { usable: 1, needed: 2 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * n * my * my { 1.0 } else { 1.0 - sse / syy };
    Ok(LineFit { slope, intercept, r2 })
}

/// Fits y ≈ e^intercept · t^slope by least squares in log-log space.
pub fn fit_power_law(t: &[f64], y: &[f64]) -> Result<LineFit> {
    if t.len() != y.len() {
        return Err(Error::Domain(format!("series lengths differ: {} vs {}", t.len(), y.len())));
    }
    if t.len() < 5 {
        return Err(Error::DegenerateFit { usable: t.len(), needed: 5 });
    }
    if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!("non-positive value y[{i}] = {v}")));
    }
    if let Some((i, v)) = t.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!("non-positive time t[{i}] = {v}")));
    }
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lt, &ly)
}
