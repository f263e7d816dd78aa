//! Learners: EXP3 and Tsallis-INF over the `C(N, K)` subset-arms, EXP2 over
//! tensorized subset features, and a constant benchmark policy.

mod design;
mod exp2;
mod mab;

pub use design::{kw_optimal_design, pseudo_inverse, DesignWeights, PINV_RTOL};
pub use exp2::{Exp2, Exp2Params};
pub use mab::{MabAlgorithm, MabLearner, TSALLIS_TOL};

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::subset::SubsetAction;

/// A bandit policy over size-K subsets. Rounds alternate `select`, `update`.
pub trait Learner: Send {
    fn name(&self) -> &str;

    fn select(&mut self, rng: &mut dyn RngCore) -> Result<SubsetAction>;

    /// Feeds back the realized reward of the action just played.
    fn update(&mut self, action: &SubsetAction, reward: f64) -> Result<()>;

    /// Sampling distribution over subset ranks for the next round, if any.
    fn distribution(&self) -> Option<&[f64]>;
}

/// Always plays the same subset.
#[derive(Debug, Clone)]
pub struct ConstantPolicy {
    action: SubsetAction,
}

pub fn constant_policy(action: SubsetAction) -> ConstantPolicy {
    ConstantPolicy { action }
}

impl Learner for ConstantPolicy {
    fn name(&self) -> &str {
        "constant"
    }

    fn select(&mut self, _rng: &mut dyn RngCore) -> Result<SubsetAction> {
        Ok(self.action.clone())
    }

    fn update(&mut self, _action: &SubsetAction, reward: f64) -> Result<()> {
        check_reward(reward)
    }

    fn distribution(&self) -> Option<&[f64]> {
        None
    }
}

pub(crate) fn check_reward(reward: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&reward) {
        return Err(Error::invalid(format!("reward {reward} outside [0, 1]")));
    }
    Ok(())
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_policy_ignores_feedback() {
        let s = SubsetAction::from_indices(vec![0, 2], 4).unwrap();
        let mut pi = constant_policy(s.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for r in [0.0, 1.0, 0.5] {
            assert_eq!(pi.select(&mut rng).unwrap(), s);
            pi.update(&s, r).unwrap();
        }
        assert!(pi.update(&s, 1.5).is_err());
    }

    #[test]
    fn sample_index_follows_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let probs = [0.2, 0.0, 0.5, 0.3];
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[sample_index(&probs, &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        for (c, p) in counts.iter().zip(probs) {
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() <= 3.0 * sd + 1e-12);
        }
    }
}
