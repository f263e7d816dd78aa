use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::design::{kw_optimal_design, pseudo_inverse, DesignWeights};
use super::{check_reward, sample_index, Learner};
use crate::error::{Error, Result};
use crate::link::Link;
use crate::reward::{tensor_features, DEFAULT_TENSOR_CAP};
use crate::subset::{subset_count, subsets, SubsetAction, DEFAULT_SUBSET_CAP};

/// EXP2 tuning. `None` fields take the defaults
/// `γ_mix = min{1/2, sqrt(D ln A / T)}` and `η = γ_mix / (2D)` with `D = N^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp2Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_mix: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default = "default_design_eps")]
    pub design_eps: f64,
    #[serde(default = "default_design_iters")]
    pub design_iters: usize,
}

fn default_design_eps() -> f64 {
    0.05
}

fn default_design_iters() -> usize {
    100_000
}

impl Exp2Params {
    pub fn standard() -> Self {
        Self { gamma_mix: None, eta: None, design_eps: default_design_eps(), design_iters: default_design_iters() }
    }
}

impl Default for Exp2Params {
    fn default() -> Self {
        Self::standard()
    }
}

/// Exponential weights over the actions `1_S^{⊗d}` with design exploration and
/// the least-squares estimate `M(p)^+ x_{S_t} r_t`.
#[derive(Debug, Clone)]
pub struct Exp2 {
    n: usize,
    k: usize,
    features: Vec<DVector<f64>>,
    design: DesignWeights,
    gamma_mix: f64,
    eta: f64,
    /// `sum_s <x_a, v̂_s>` per action.
    estimates: Vec<f64>,
    probs: Vec<f64>,
    weights: Vec<f64>,
}

impl Exp2 {
    pub fn new(n: usize, k: usize, d: usize, horizon: usize, params: Exp2Params) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 <= K <= N, got N={n}, K={k}")));
        }
        if d == 0 || d > k {
            return Err(Error::invalid(format!("need 1 <= d <= K, got d={d}, K={k}")));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        subset_count(n, k, DEFAULT_SUBSET_CAP)?;
        let features = subsets(n, k)
            .map(|idx| {
                let s = SubsetAction::from_indices(idx, n)?;
                Ok(DVector::from_vec(tensor_features(&s, n, d, DEFAULT_TENSOR_CAP)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let raw: Vec<Vec<f64>> = features.iter().map(|x| x.as_slice().to_vec()).collect();
        let design = kw_optimal_design(&raw, params.design_eps, params.design_iters)?;
        let a = features.len() as f64;
        let dim = features[0].len() as f64;
        let gamma_mix = params.gamma_mix.unwrap_or_else(|| (dim * a.ln() / horizon as f64).sqrt().min(0.5));
        if !(0.0..=1.0).contains(&gamma_mix) {
            return Err(Error::invalid(format!("gamma_mix must lie in [0, 1], got {gamma_mix}")));
        }
        let eta = params.eta.unwrap_or(gamma_mix / (2.0 * dim));
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be finite and nonnegative, got {eta}")));
        }
        let count = features.len();
        let mut out = Self {
            n,
            k,
            features,
            design,
            gamma_mix,
            eta,
            estimates: vec![0.0; count],
            probs: vec![0.0; count],
            weights: vec![0.0; count],
        };
        out.refresh();
        Ok(out)
    }

    /// Checks that `g` is a polynomial the degree-`d` lift can represent.
    pub fn check_link(g: &Link, d: usize) -> Result<()> {
        match g.degree() {
            Some(deg) if deg <= d => Ok(()),
            Some(deg) => Err(Error::invalid(format!("link has degree {deg}, above the tensor order d={d}"))),
            None => Err(Error::invalid("EXP2 needs a polynomial link")),
        }
    }

    pub fn design(&self) -> &DesignWeights {
        &self.design
    }

    pub fn gamma_mix(&self) -> f64 {
        self.gamma_mix
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cumulative_estimates(&self) -> &[f64] {
        &self.estimates
    }

    /// `M(p) = sum_a p_a x_a x_a^T` for the current sampling distribution.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let d = self.features[0].len();
        let mut m = DMatrix::zeros(d, d);
        for (x, &p) in self.features.iter().zip(&self.probs) {
            if p > 0.0 {
                m.ger(p, x, x, 1.0);
            }
        }
        m
    }

    /// `M(p)^+ x_S r` under the current distribution.
    pub fn estimate(&self, action: &SubsetAction, reward: f64) -> Result<DVector<f64>> {
        let x = self
            .features
            .get(action.rank())
            .filter(|_| action.len() == self.k)
            .ok_or_else(|| Error::invalid("action does not belong to this learner"))?;
        let (minv, _) = pseudo_inverse(&self.second_moment());
        Ok(minv * x * reward)
    }

    fn refresh(&mut self) {
        super::mab::exp_weights(&self.estimates.iter().map(|e| -e).collect::<Vec<_>>(), self.eta, &mut self.weights);
        for ((p, &w), &pi) in self.probs.iter_mut().zip(&self.weights).zip(&self.design.pi) {
            *p = (1.0 - self.gamma_mix) * w + self.gamma_mix * pi;
        }
        let total: f64 = self.probs.iter().sum();
        self.probs.iter_mut().for_each(|p| *p /= total);
    }
}

impl Learner for Exp2 {
    fn name(&self) -> &str {
        "exp2"
    }

    fn select(&mut self, rng: &mut dyn RngCore) -> Result<SubsetAction> {
        SubsetAction::from_rank(sample_index(&self.probs, rng), self.n, self.k)
    }

    fn update(&mut self, action: &SubsetAction, reward: f64) -> Result<()> {
        check_reward(reward)?;
        if reward != 0.0 {
            let v_hat = self.estimate(action, reward)?;
            for (e, x) in self.estimates.iter_mut().zip(&self.features) {
                *e += x.dot(&v_hat);
            }
        } else if action.len() != self.k || action.rank() >= self.features.len() {
            return Err(Error::invalid("action does not belong to this learner"));
        }
        self.refresh();
        Ok(())
    }

    fn distribution(&self) -> Option<&[f64]> {
        Some(&self.probs)
    }
}
