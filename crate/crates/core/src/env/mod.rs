//! Adversaries and feedback channels.
//!
//! An [`Adversary`] chooses the hidden vector `v_t` each round (it may look
//! at the observable history) and owns the [`RewardModel`] that turns
//! `(S_t, v_t)` into feedback: a Bernoulli draw through a link, or an MNL
//! choice with per-item prices.

mod delta;
mod hard;
mod schedule;

pub use delta::{delta_schedule, kl_coefficient, DeltaMode};
pub use hard::{HardAdversary, HardVariant};
pub use schedule::{load_schedule, write_schedule, Oblivious, Stochastic};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{Link, SLACK};
use crate::reward::{clamp_unit, expected_reward, RewardVector};
use crate::subset::SubsetAction;

/// What the learner observes after playing `S_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feedback {
    /// `r_t` in {0, 1}.
    Binary(u8),
    /// The purchased item, or `None` for no purchase.
    Choice(Option<usize>),
}

/// One round of interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvRecord {
    /// Round index, starting at 1.
    pub t: usize,
    pub hidden: RewardVector,
    pub action: SubsetAction,
    pub feedback: Feedback,
    /// Realized reward handed to the learner, in `[0, 1]`.
    pub reward: f64,
}

/// How `(S, v)` becomes a reward.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    /// `r ~ Bernoulli(g(sum_{i in S} v_i))`.
    Link(Link),
    /// MNL choice; reward is the price of the purchased item.
    Mnl { prices: Vec<f64> },
}

impl RewardModel {
    pub fn mnl_unit(n: usize) -> Self {
        RewardModel::Mnl { prices: vec![1.0; n] }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let RewardModel::Mnl { prices } = self {
            check_prices(prices, n)?;
        }
        Ok(())
    }

    /// Exact expected reward of `s` under a fixed `v`.
    pub fn expected(&self, s: &SubsetAction, v: &RewardVector) -> Result<f64> {
        match self {
            RewardModel::Link(g) => expected_reward(s, v, g),
            RewardModel::Mnl { prices } => mnl_revenue(s, v, prices),
        }
    }

    /// Samples feedback and the realized reward.
    pub fn sample(&self, s: &SubsetAction, v: &RewardVector, rng: &mut dyn RngCore) -> Result<(Feedback, f64)> {
        match self {
            RewardModel::Link(g) => {
                let r = bernoulli_feedback(expected_reward(s, v, g)?, rng)?;
                Ok((Feedback::Binary(r), r as f64))
            }
            RewardModel::Mnl { prices } => {
                check_prices(prices, v.len())?;
                let choice = mnl_sample_choice(s, v, rng);
                let reward = choice.map_or(0.0, |i| prices[i]);
                Ok((Feedback::Choice(choice), reward))
            }
        }
    }
}

/// An environment that picks `v_t` given the observable history.
pub trait Adversary: Send {
    /// `(N, K)`.
    fn dims(&self) -> (usize, usize);

    fn model(&self) -> &RewardModel;

    /// The hidden vector for round `t` (1-based).
    fn draw(&mut self, t: usize, history: &[EnvRecord], rng: &mut dyn RngCore) -> Result<RewardVector>;

    /// Expected reward of `s` under the law of `v_t`, when it is known in
    /// closed form. Shipped adversaries do not depend on the history.
    fn mean_reward(&self, t: usize, s: &SubsetAction) -> Result<Option<f64>>;
}

/// Draws `v_t`, samples feedback for `action`, and returns the record.
pub fn play_round(
    adversary: &mut dyn Adversary,
    t: usize,
    history: &[EnvRecord],
    action: &SubsetAction,
    rng: &mut dyn RngCore,
) -> Result<EnvRecord> {
    let hidden = adversary.draw(t, history, rng)?;
    let (feedback, reward) = adversary.model().sample(action, &hidden, rng)?;
    Ok(EnvRecord { t, hidden, action: action.clone(), feedback, reward })
}

/// 1 with probability `mean`.
pub fn bernoulli_feedback(mean: f64, rng: &mut dyn RngCore) -> Result<u8> {
    let p = clamp_unit_slack(mean)?;
    Ok((rng.random::<f64>() < p) as u8)
}

fn clamp_unit_slack(p: f64) -> Result<f64> {
    if !(-SLACK..=1.0 + SLACK).contains(&p) {
        return Err(Error::invalid(format!("Bernoulli mean {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `(P[no purchase], P[s_0], ..., P[s_{K-1}])` under MNL with `v_0 = 1`.
pub fn mnl_choice_probs(s: &SubsetAction, v: &RewardVector) -> Vec<f64> {
    let vals = v.values();
    let denom = 1.0 + s.indices().iter().map(|&i| vals[i]).sum::<f64>();
    std::iter::once(1.0 / denom).chain(s.indices().iter().map(|&i| vals[i] / denom)).collect()
}

/// Samples the purchased item (`None` for no purchase).
pub fn mnl_sample_choice(s: &SubsetAction, v: &RewardVector, rng: &mut dyn RngCore) -> Option<usize> {
    let probs = mnl_choice_probs(s, v);
    let u: f64 = rng.random();
    let mut acc = probs[0];
    if u < acc {
        return None;
    }
    for (j, &p) in probs[1..].iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(s.indices()[j]);
        }
    }
    // round-off left u above the total; attribute it to the last positive item
    s.indices().iter().zip(&probs[1..]).rev().find(|(_, &p)| p > 0.0).map(|(&i, _)| i)
}

/// `sum_{i in S} p_i v_i / (1 + sum_{i in S} v_i)`.
pub fn mnl_revenue(s: &SubsetAction, v: &RewardVector, prices: &[f64]) -> Result<f64> {
    check_prices(prices, v.len())?;
    if let Some(&i) = s.indices().iter().find(|&&i| i >= v.len()) {
        return Err(Error::invalid(format!("subset index {i} outside reward vector of length {}", v.len())));
    }
    let vals = v.values();
    let num: f64 = s.indices().iter().map(|&i| prices[i] * vals[i]).sum();
    let den: f64 = 1.0 + s.indices().iter().map(|&i| vals[i]).sum::<f64>();
    clamp_unit(num / den)
}

fn check_prices(prices: &[f64], n: usize) -> Result<()> {
    if prices.len() != n {
        return Err(Error::invalid(format!("{} prices for {n} items", prices.len())));
    }
    if prices.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("prices must lie in [0, 1]"));
    }
    Ok(())
}
