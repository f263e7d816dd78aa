use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Eigenvalues below `PINV_RTOL * λ_max` are treated as zero.
pub const PINV_RTOL: f64 = 1e-10;

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix, with its rank.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cut = PINV_RTOL * lmax;
    let d = m.nrows();
    let mut out = DMatrix::zeros(d, d);
    let mut rank = 0;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cut && lam > 0.0 {
            let u = eig.eigenvectors.column(j);
            out += (u * u.transpose()) / lam;
            rank += 1;
        }
    }
    (out, rank)
}

/// Exploration distribution from a D-optimal design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignWeights {
    pub pi: Vec<f64>,
    /// `max_a x_a^T M(π)^+ x_a`.
    pub max_leverage: f64,
    /// Dimension of the feature span.
    pub rank: usize,
    pub iterations: usize,
    /// Whether `max_leverage <= (1 + ε) rank` was reached.
    pub certified: bool,
}

fn moment(features: &[DVector<f64>], pi: &[f64]) -> DMatrix<f64> {
    let d = features[0].len();
    let mut m = DMatrix::zeros(d, d);
    for (x, &w) in features.iter().zip(pi) {
        if w > 0.0 {
            m.ger(w, x, x, 1.0);
        }
    }
    m
}

fn leverages(features: &[DVector<f64>], minv: &DMatrix<f64>) -> Vec<f64> {
    features.iter().map(|x| x.dot(&(minv * x))).collect()
}

/// Frank-Wolfe (Fedorov-Wynn) iterations for the D-optimal design: start
/// uniform, then repeatedly move mass toward the action of largest leverage
/// with the exact line-search step `(L/r - 1) / (L - 1)`, until the largest
/// leverage is within `(1 + eps)` of the span dimension `r`.
pub fn kw_optimal_design(features: &[Vec<f64>], eps: f64, max_iters: usize) -> Result<DesignWeights> {
    let first = features.first().ok_or_else(|| Error::invalid("design needs at least one feature"))?;
    let d = first.len();
    if d == 0 || features.iter().any(|x| x.len() != d) {
        return Err(Error::invalid("features must share a nonzero dimension"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("design tolerance must be positive, got {eps}")));
    }
    let xs: Vec<DVector<f64>> = features.iter().map(|x| DVector::from_column_slice(x)).collect();
    let a = xs.len();
    let mut pi = vec![1.0 / a as f64; a];
    let mut iterations = 0;
    loop {
        let (minv, rank) = pseudo_inverse(&moment(&xs, &pi));
        if rank == 0 {
            return Err(Error::invalid("features are all zero"));
        }
        let lev = leverages(&xs, &minv);
        let (best, &lmax) = lev.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).expect("at least one feature");
        let r = rank as f64;
        let certified = lmax <= (1.0 + eps) * r;
        if certified || iterations >= max_iters {
            return Ok(DesignWeights { pi, max_leverage: lmax, rank, iterations, certified });
        }
        let step = ((lmax / r - 1.0) / (lmax - 1.0)).clamp(0.0, 1.0);
        pi.iter_mut().for_each(|w| *w *= 1.0 - step);
        pi[best] += step;
        iterations += 1;
    }
}
