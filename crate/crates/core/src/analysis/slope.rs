use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit of `ln R = intercept + slope ln T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Points kept after dropping nonpositive regrets.
    pub used: usize,
}

/// OLS on `(ln T, ln regret)`. Points with nonpositive regret are dropped with
/// a warning.
pub fn slope_estimate(t_grid: &[f64], regrets: &[f64]) -> Result<SlopeFit> {
    if t_grid.len() != regrets.len() {
        return Err(Error::invalid("T grid and regrets differ in length"));
    }
    if t_grid.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 grid points, got {}", t_grid.len())));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &r) in t_grid.iter().zip(regrets) {
        if !(t > 0.0) {
            return Err(Error::invalid(format!("horizon {t} must be positive")));
        }
        if r > 0.0 && r.is_finite() {
            xs.push(t.ln());
            ys.push(r.ln());
        } else {
            log::warn!("dropping grid point T={t} with regret {r}");
        }
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid("fewer than two positive regrets to fit"));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("grid points share one horizon"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(SlopeFit { slope, intercept, r2, used: n })
}

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
