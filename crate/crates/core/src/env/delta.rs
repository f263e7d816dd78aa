use crate::error::{Error, Result};
use crate::subset::binomial;

/// Which counting argument the mixing probability is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    NonPoly,
    /// Degree-`d` polynomial link.
    Poly(usize),
}

/// Mixing probability of the hard adversary.
///
/// - `NonPoly`: `min{1, sqrt(C(N,K)) / (2 Γ sqrt(T))}`
/// - `Poly(d)`: `min{1, sqrt(C(N,d)) / (2 Γ sqrt(C(K,d) T))}`
pub fn delta_schedule(n: usize, k: usize, t: usize, mode: DeltaMode, kl_coeff: f64) -> f64 {
    let t = t as f64;
    let raw = match mode {
        DeltaMode::NonPoly => (binomial(n, k) as f64).sqrt() / (2.0 * kl_coeff * t.sqrt()),
        DeltaMode::Poly(d) => (binomial(n, d) as f64).sqrt() / (2.0 * kl_coeff * (binomial(k, d) as f64 * t).sqrt()),
    };
    raw.min(1.0)
}

const DELTA_GRID: usize = 10_000;
const SAFETY: f64 = 1.0 + 1e-6;

/// Γ with `KL(P ‖ (1-δ)P + δQ) <= Γ² δ²` for every δ in (0, 1].
///
/// `p` is the uninformative law and `q` the informative law at δ = 1. The
/// supremum of `sqrt(KL)/δ` is taken over the grid `j / 10^4` together with
/// its small-δ limit `sqrt(χ²(Q ‖ P) / 2)`, then inflated by a relative 1e-6.
pub fn kl_coefficient(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::invalid("laws must have the same nonzero length"));
    }
    for law in [p, q] {
        if law.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || (law.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("not a probability vector: {law:?}")));
        }
    }
    let chi2: f64 = p
        .iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            let h = qi - pi;
            if pi > 0.0 {
                h * h / pi
            } else {
                0.0
            }
        })
        .sum();
    let mut best = (chi2 / 2.0).sqrt();
    for j in 1..=DELTA_GRID {
        let delta = j as f64 / DELTA_GRID as f64;
        let kl = mixture_kl(p, q, delta);
        if !kl.is_finite() {
            return Err(Error::Numeric(format!("KL is unbounded at delta={delta}")));
        }
        best = best.max(kl.max(0.0).sqrt() / delta);
    }
    if best == 0.0 {
        return Err(Error::Numeric("the two laws coincide, so the coefficient is zero".into()));
    }
    Ok(best * SAFETY)
}

fn mixture_kl(p: &[f64], q: &[f64], delta: f64) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| {
            let mi = (1.0 - delta) * pi + delta * qi;
            pi * (pi / mi).ln()
        })
        .sum()
}
