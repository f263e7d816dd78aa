//! Subset-averaged link evaluations and the alternating binomial identity
//! they satisfy for low-degree polynomials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::link::{Link, Polynomial};
use crate::subset::{binomial, subsets};

/// `g_ℓ(x) = C(m, ℓ)^{-1} sum_{|S| = ℓ} g(sum_{i in S} x_i + (b - ℓ) x0)`.
pub fn symmetrized_g(ell: usize, x: &[f64], x0: f64, b: f64, g: &Link) -> Result<f64> {
    let m = x.len();
    if ell == 0 || ell > m {
        return Err(Error::invalid(format!("need 1 <= ell <= m, got ell={ell}, m={m}")));
    }
    if b < m as f64 {
        return Err(Error::invalid(format!("shift budget b={b} must be at least m={m}")));
    }
    if !(0.0..=1.0).contains(&x0) || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("symmetrized_g arguments must lie in [0, 1]"));
    }
    let shift = (b - ell as f64) * x0;
    let mut total = 0.0;
    let mut count = 0usize;
    for s in subsets(m, ell) {
        let sum: f64 = s.iter().map(|&i| x[i]).sum();
        total += g.eval(sum + shift)?;
        count += 1;
    }
    Ok(total / count as f64)
}

/// `s_ℓ(y)` with `s_0 = s(0)`: the average of `s` over the size-ℓ partial sums of `y`.
pub fn symmetrized_polynomial(ell: usize, s: &Polynomial, y: &[f64]) -> f64 {
    if ell == 0 {
        return s.eval(0.0);
    }
    let (total, count) =
        subsets(y.len(), ell).fold((0.0, 0usize), |(t, c), idx| (t + s.eval(idx.iter().map(|&i| y[i]).sum()), c + 1));
    total / count as f64
}

/// `sum_{ℓ=0}^{m} (-1)^ℓ C(m, ℓ) s_ℓ(y)`, which vanishes whenever
/// `deg(s) <= m - 1`.
pub fn comb_identity_residual(s: &Polynomial, y: &[f64]) -> f64 {
    let m = y.len();
    (0..=m)
        .map(|ell| {
            let sign = if ell % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(m, ell) as f64 * symmetrized_polynomial(ell, s, y)
        })
        .sum()
}

/// Magnitude against which [`comb_identity_residual`] round-off is measured:
/// `sum_ℓ C(m, ℓ) * |s|(sum |y_i|)` with `|s|` the absolute-coefficient polynomial.
pub fn comb_identity_scale(s: &Polynomial, y: &[f64]) -> f64 {
    let m = y.len();
    let reach: f64 = y.iter().map(|v| v.abs()).sum();
    (2u128.pow(m as u32) as f64) * s.abs_scale(reach).max(1.0)
}

/// Outcome of [`identity_battery`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityBattery {
    pub trials: usize,
    /// Largest `|residual|` over polynomials of degree at most `m - 1`.
    pub max_low_degree_residual: f64,
    /// Degree-`m` polynomials whose residual exceeds [`COUNTEREXAMPLE_FLOOR`].
    pub counterexample_hits: usize,
    pub counterexample_fraction: f64,
    pub passed: bool,
}

pub const IDENTITY_TOL: f64 = 1e-9;
pub const COUNTEREXAMPLE_FLOOR: f64 = 1e-3;

/// Random check of the alternating identity: each trial draws `m` in
/// `2..=6`, a polynomial of degree below `m` and one of degree exactly `m`,
/// coefficients and points uniform on `[-1, 1]`. Passes when every low-degree
/// residual is within [`IDENTITY_TOL`] and at least 95% of the degree-`m`
/// residuals exceed [`COUNTEREXAMPLE_FLOOR`].
pub fn identity_battery(trials: usize, seed: u64) -> IdentityBattery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_low = 0.0f64;
    let mut hits = 0;
    for _ in 0..trials {
        let m = rng.random_range(2..=6usize);
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let deg = rng.random_range(0..m);
        let low = Polynomial::new((0..=deg).map(|_| rng.random_range(-1.0..=1.0)).collect());
        max_low = max_low.max(comb_identity_residual(&low, &y).abs());
        let mut coeffs: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if coeffs[m] == 0.0 {
            coeffs[m] = 1.0;
        }
        if comb_identity_residual(&Polynomial::new(coeffs), &y).abs() > COUNTEREXAMPLE_FLOOR {
            hits += 1;
        }
    }
    let fraction = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
    IdentityBattery {
        trials,
        max_low_degree_residual: max_low,
        counterexample_hits: hits,
        counterexample_fraction: fraction,
        passed: trials > 0 && max_low <= IDENTITY_TOL && fraction >= 0.95,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_collapses_to_g_of_b_x0() {
        let g = Link::mnl(3.0).unwrap();
        let x0 = 0.4;
        for ell in 1..=3 {
            let v = symmetrized_g(ell, &[x0; 3], x0, 3.0, &g).unwrap();
            assert!((v - g.eval(3.0 * x0).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn two_term_definition() {
        let g = Link::mnl(2.0).unwrap();
        let (u, w, x0, b) = (0.2, 0.9, 0.3, 2.0);
        let expect = (g.eval(u + (b - 1.0) * x0).unwrap() + g.eval(w + (b - 1.0) * x0).unwrap()) / 2.0;
        assert!((symmetrized_g(1, &[u, w], x0, b, &g).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn three_pairs_by_hand() {
        let g = Link::mnl(3.0).unwrap();
        let x = [0.1, 0.4, 0.9];
        let (x0, b) = (0.5, 3.0);
        let f = |s: f64| s / (1.0 + s);
        let shift = (b - 2.0) * x0;
        let expect = (f(x[0] + x[1] + shift) + f(x[0] + x[2] + shift) + f(x[1] + x[2] + shift)) / 3.0;
        assert!((symmetrized_g(2, &x, x0, b, &g).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = Link::mnl(3.0).unwrap();
        assert!(symmetrized_g(0, &[0.1, 0.2], 0.5, 2.0, &g).is_err());
        assert!(symmetrized_g(3, &[0.1, 0.2], 0.5, 2.0, &g).is_err());
        assert!(symmetrized_g(1, &[0.1, 0.2], 0.5, 1.5, &g).is_err());
        assert!(symmetrized_g(1, &[0.1, 1.2], 0.5, 2.0, &g).is_err());
    }

    #[test]
    fn identity_for_linear_with_two_points() {
        let s = Polynomial::new(vec![0.0, 1.0]);
        assert!(comb_identity_residual(&s, &[0.3, -0.8]).abs() < 1e-15);
    }

    #[test]
    fn quadratic_violates_identity_at_m_two() {
        let s = Polynomial::new(vec![0.0, 0.0, 1.0]);
        // s_0 = 0, s_1 = 1, s_2 = 4
        assert!((comb_identity_residual(&s, &[1.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_low_degree_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let m = rng.random_range(2..=6usize);
            let deg = rng.random_range(0..m);
            let s = Polynomial::new((0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect());
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = comb_identity_residual(&s, &y);
            assert!(r.abs() <= 1e-9, "m={m} deg={deg} residual={r}");
            assert!(r.abs() <= 1e-12 * comb_identity_scale(&s, &y));
        }
    }

    #[test]
    fn battery_passes() {
        let b = identity_battery(500, 1);
        assert!(b.passed, "{b:?}");
        assert_eq!(identity_battery(500, 1), b);
    }

    #[test]
    fn degree_m_residual_is_leading_term_times_product() {
        // only the monomial with every exponent 1 survives: (-1)^m m! a_m prod(y)
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for m in 1..=6usize {
            let coeffs: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fact: f64 = (1..=m).map(|i| i as f64).product();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let expect = sign * fact * coeffs[m] * y.iter().product::<f64>();
            let s = Polynomial::new(coeffs);
            assert!((comb_identity_residual(&s, &y) - expect).abs() < 1e-10);
        }
    }
}
