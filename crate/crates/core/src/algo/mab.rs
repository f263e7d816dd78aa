use rand::RngCore;

use super::{check_reward, sample_index, Learner};
use crate::error::{Error, Result};
use crate::subset::{subset_count, SubsetAction, DEFAULT_SUBSET_CAP};

/// Residual target for the Tsallis-INF normalizer.
pub const TSALLIS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MabAlgorithm {
    /// Exponential weights with `η_t = sqrt(ln A / (A t))`; optional uniform
    /// mixing `p = (1 - γ) q + γ / A`.
    Exp3 { mixing: f64 },
    /// Tsallis-INF with α = 1/2 and `η_t = 2 / sqrt(t)`.
    TsallisInf,
}

/// A multi-armed learner whose arms are the `C(N, K)` subsets, indexed by rank.
#[derive(Debug, Clone)]
pub struct MabLearner {
    algorithm: MabAlgorithm,
    n: usize,
    k: usize,
    /// Cumulative importance-weighted loss estimates.
    losses: Vec<f64>,
    probs: Vec<f64>,
    /// Rounds completed.
    rounds: usize,
}

impl MabLearner {
    pub fn new(algorithm: MabAlgorithm, n: usize, k: usize) -> Result<Self> {
        Self::with_cap(algorithm, n, k, DEFAULT_SUBSET_CAP)
    }

    pub fn with_cap(algorithm: MabAlgorithm, n: usize, k: usize, cap: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 <= K <= N, got N={n}, K={k}")));
        }
        if let MabAlgorithm::Exp3 { mixing } = algorithm {
            if !(0.0..=1.0).contains(&mixing) {
                return Err(Error::invalid(format!("EXP3 mixing must lie in [0, 1], got {mixing}")));
            }
        }
        let arms = subset_count(n, k, cap)?;
        let mut out =
            Self { algorithm, n, k, losses: vec![0.0; arms], probs: vec![1.0 / arms as f64; arms], rounds: 0 };
        out.refresh()?;
        Ok(out)
    }

    pub fn exp3(n: usize, k: usize) -> Result<Self> {
        Self::new(MabAlgorithm::Exp3 { mixing: 0.0 }, n, k)
    }

    pub fn tsallis_inf(n: usize, k: usize) -> Result<Self> {
        Self::new(MabAlgorithm::TsallisInf, n, k)
    }

    pub fn num_arms(&self) -> usize {
        self.losses.len()
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Recomputes the distribution for round `rounds + 1`.
    fn refresh(&mut self) -> Result<()> {
        let t = (self.rounds + 1) as f64;
        let a = self.losses.len() as f64;
        match self.algorithm {
            MabAlgorithm::Exp3 { mixing } => {
                let eta = (a.ln() / (a * t)).sqrt();
                exp_weights(&self.losses, eta, &mut self.probs);
                if mixing > 0.0 {
                    self.probs.iter_mut().for_each(|p| *p = (1.0 - mixing) * *p + mixing / a);
                }
            }
            MabAlgorithm::TsallisInf => {
                let eta = 2.0 / t.sqrt();
                tsallis_probs(&self.losses, eta, &mut self.probs)?;
            }
        }
        Ok(())
    }
}

/// `p_i ∝ exp(-η L_i)`, shifted by the minimum loss for stability.
pub(crate) fn exp_weights(losses: &[f64], eta: f64, out: &mut [f64]) {
    let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (p, &l) in out.iter_mut().zip(losses) {
        *p = (-eta * (l - min)).exp();
        total += *p;
    }
    out.iter_mut().for_each(|p| *p /= total);
}

/// `p_i = 4 / (η (L_i - x))²` with `x < min L` chosen so that `sum p = 1`.
///
/// The sum is increasing and convex in `x` on `(-∞, min L)`, and the root lies
/// in `[min L - 2 sqrt(A)/η, min L - 2/η]`. Newton from the right end moves
/// monotonically toward it; bisection takes over if a step leaves the bracket.
pub(crate) fn tsallis_probs(losses: &[f64], eta: f64, out: &mut [f64]) -> Result<f64> {
    let a = losses.len() as f64;
    let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum_and_slope = |x: f64| {
        losses.iter().fold((0.0, 0.0), |(s, d), &l| {
            let z = eta * (l - x);
            (s + 4.0 / (z * z), d + 8.0 * eta / (z * z * z))
        })
    };
    let (mut lo, mut hi) = (min - 2.0 * a.sqrt() / eta, min - 2.0 / eta);
    let mut x = hi;
    let mut converged = false;
    for _ in 0..200 {
        let (s, ds) = sum_and_slope(x);
        let f = s - 1.0;
        if f.abs() <= TSALLIS_TOL {
            converged = true;
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = x - f / ds;
        x = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            converged = (sum_and_slope(x).0 - 1.0).abs() <= 1e-10;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric("Tsallis-INF normalization did not converge".into()));
    }
    let mut total = 0.0;
    for (p, &l) in out.iter_mut().zip(losses) {
        let z = eta * (l - x);
        *p = 4.0 / (z * z);
        total += *p;
    }
    out.iter_mut().for_each(|p| *p /= total);
    Ok(x)
}

impl Learner for MabLearner {
    fn name(&self) -> &str {
        match self.algorithm {
            MabAlgorithm::Exp3 { .. } => "exp3",
            MabAlgorithm::TsallisInf => "tsallis_inf",
        }
    }

    fn select(&mut self, rng: &mut dyn RngCore) -> Result<SubsetAction> {
        SubsetAction::from_rank(sample_index(&self.probs, rng), self.n, self.k)
    }

    fn update(&mut self, action: &SubsetAction, reward: f64) -> Result<()> {
        check_reward(reward)?;
        let arm = action.rank();
        if action.len() != self.k || arm >= self.losses.len() {
            return Err(Error::invalid("action does not belong to this learner"));
        }
        let p = self.probs[arm];
        if p <= 0.0 {
            return Err(Error::Numeric(format!("arm {arm} was played with probability {p}")));
        }
        self.losses[arm] += (1.0 - reward) / p;
        self.rounds += 1;
        self.refresh()
    }

    fn distribution(&self) -> Option<&[f64]> {
        Some(&self.probs)
    }
}
