use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::{delta::kl_coefficient, mnl_choice_probs, Adversary, EnvRecord, RewardModel};
use crate::error::{Error, Result};
use crate::hard::{verify_hard_instance, HardInstance, DEFAULT_TOL_EQ, DEFAULT_TOL_GAP};
use crate::link::{Link, LinkKind};
use crate::reward::RewardVector;
use crate::subset::{permutations, SubsetAction};

/// Which lower-bound construction the adversary realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardVariant {
    /// `m = K`; only `S_t = S*` is informative. Bernoulli feedback.
    NonPoly,
    /// `m = d < K`; informative iff `S* ⊆ S_t`. Bernoulli feedback.
    Poly,
    /// `m = K` with an MNL link and unit prices; feedback is the choice.
    Mnl,
}

/// δ-mixture adversary built on a verified hard instance. Coordinates outside
/// `S*` are always `x0`; with probability δ the `S*` coordinates are a fresh
/// exchangeable draw from the instance, otherwise they are `x0` too.
#[derive(Debug, Clone)]
pub struct HardAdversary {
    variant: HardVariant,
    inst: HardInstance,
    link: Link,
    model: RewardModel,
    special: SubsetAction,
    n: usize,
    k: usize,
    delta: f64,
    sampler: WeightedIndex<f64>,
    /// Mixture mean reward indexed by overlap `|S_t ∩ S*|`, at this δ.
    by_overlap: Vec<f64>,
    /// `g(K x0)` and `E_µ[g(sum X + (b - m) x0)]`.
    baseline: f64,
    informative: f64,
}

impl HardAdversary {
    pub fn new(
        variant: HardVariant,
        inst: HardInstance,
        link: Link,
        special: SubsetAction,
        n: usize,
        k: usize,
        delta: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        if k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 <= K <= N, got N={n}, K={k}")));
        }
        let m = inst.m;
        match variant {
            HardVariant::NonPoly | HardVariant::Mnl if m != k => {
                return Err(Error::invalid(format!("instance has m={m}, this adversary needs m=K={k}")));
            }
            HardVariant::Poly if m >= k => {
                return Err(Error::invalid(format!("instance has m={m}, this adversary needs m=d<K={k}")));
            }
            _ => {}
        }
        if variant == HardVariant::Mnl && link.kind() != &LinkKind::Mnl {
            return Err(Error::invalid("the MNL adversary needs the MNL link"));
        }
        if (inst.b - k as f64).abs() > 1e-12 {
            return Err(Error::invalid(format!("instance has b={}, expected b=K={k}", inst.b)));
        }
        if special.len() != m || special.indices().iter().any(|&i| i >= n) {
            return Err(Error::invalid(format!("S* must be a size-{m} subset of [0, {n})")));
        }
        let report = verify_hard_instance(&inst, &link, DEFAULT_TOL_EQ, DEFAULT_TOL_GAP);
        if !report.valid {
            return Err(Error::invalid(format!("refusing INVALID hard instance: {}", report.failures.join("; "))));
        }
        let baseline = inst.baseline(&link)?;
        let moments = inst.moments(&link)?;
        let informative = moments[m - 1];
        let by_overlap =
            std::iter::once(baseline).chain(moments.iter().map(|&mu| (1.0 - delta) * baseline + delta * mu)).collect();
        let sampler =
            WeightedIndex::new(&inst.weights).map_err(|e| Error::Numeric(format!("instance weights: {e}")))?;
        let model = match variant {
            HardVariant::Mnl => RewardModel::mnl_unit(n),
            _ => RewardModel::Link(link.clone()),
        };
        Ok(Self { variant, inst, link, model, special, n, k, delta, sampler, by_overlap, baseline, informative })
    }

    pub fn variant(&self) -> HardVariant {
        self.variant
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    pub fn instance(&self) -> &HardInstance {
        &self.inst
    }

    pub fn special(&self) -> &SubsetAction {
        &self.special
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `g(K x0)`.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// `g(K x0) + δ γ`, the mean reward of any optimal action.
    pub fn optimal_mean(&self) -> f64 {
        self.by_overlap[self.inst.m]
    }

    /// Whether `s` receives the informative law.
    pub fn is_informative(&self, s: &SubsetAction) -> bool {
        self.special.is_subset_of(s)
    }

    /// Exact mixture mean reward of `s`, from the instance weights.
    pub fn mixture_mean(&self, s: &SubsetAction) -> Result<f64> {
        self.check_action(s)?;
        Ok(self.by_overlap[s.overlap(&self.special)])
    }

    /// Exact mixture law of the MNL choice for `s`:
    /// `(P[no purchase], P[s_0], ..., P[s_{K-1}])`. Averages over every atom
    /// and every assignment of its coordinates to `S*`.
    pub fn mixture_choice_law(&self, s: &SubsetAction) -> Result<Vec<f64>> {
        self.check_action(s)?;
        let x0 = self.inst.x0;
        let flat = RewardVector::constant(self.n, x0)?;
        let mut law: Vec<f64> = mnl_choice_probs(s, &flat).iter().map(|p| (1.0 - self.delta) * p).collect();
        let perms = permutations(self.inst.m);
        let share = self.delta / perms.len() as f64;
        let mut v = vec![x0; self.n];
        for (atom, &w) in self.inst.support.iter().zip(&self.inst.weights) {
            for perm in &perms {
                for (j, &i) in self.special.indices().iter().enumerate() {
                    v[i] = atom[perm[j]];
                }
                let probs = mnl_choice_probs(s, &RewardVector::new(v.clone())?);
                for (acc, p) in law.iter_mut().zip(probs) {
                    *acc += share * w * p;
                }
            }
        }
        Ok(law)
    }

    /// Γ for this instance: the KL coefficient between the uninformative law and
    /// the informative law at δ = 1 (Bernoulli means, or MNL choice laws).
    pub fn kl_coefficient(&self) -> Result<f64> {
        match self.variant {
            HardVariant::Mnl => {
                let s = self.special.clone();
                let flat = RewardVector::constant(self.n, self.inst.x0)?;
                let p = mnl_choice_probs(&s, &flat);
                let full = HardAdversary { delta: 1.0, ..self.clone() };
                kl_coefficient(&p, &full.mixture_choice_law(&s)?)
            }
            _ => kl_coefficient(&[1.0 - self.baseline, self.baseline], &[1.0 - self.informative, self.informative]),
        }
    }

    fn check_action(&self, s: &SubsetAction) -> Result<()> {
        if s.len() != self.k || s.indices().iter().any(|&i| i >= self.n) {
            return Err(Error::invalid(format!("action must be a size-{} subset of [0, {})", self.k, self.n)));
        }
        Ok(())
    }
}

impl Adversary for HardAdversary {
    fn dims(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    fn model(&self) -> &RewardModel {
        &self.model
    }

    fn draw(&mut self, _t: usize, _history: &[EnvRecord], rng: &mut dyn RngCore) -> Result<RewardVector> {
        let mut v = vec![self.inst.x0; self.n];
        if rng.random::<f64>() < self.delta {
            let mut atom = self.inst.support[self.sampler.sample(rng)].clone();
            atom.shuffle(rng);
            for (&i, x) in self.special.indices().iter().zip(atom) {
                v[i] = x;
            }
        }
        RewardVector::new(v)
    }

    fn mean_reward(&self, _t: usize, s: &SubsetAction) -> Result<Option<f64>> {
        self.mixture_mean(s).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::mnl_sample_choice;
    use crate::hard::{default_x0_candidates, find_hard_instance};
    use crate::subset::subsets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mnl_instance(k: usize, q: usize) -> (HardInstance, Link) {
        let g = Link::mnl(k as f64).unwrap();
        let inst = find_hard_instance(&g, k, k as f64, q, &default_x0_candidates()).unwrap();
        (inst, g)
    }

    // exact mean by brute force over atoms and permutations
    fn oracle_mean(adv: &HardAdversary, s: &SubsetAction) -> f64 {
        let inst = adv.instance();
        let g = &adv.link;
        let sum_flat = s.len() as f64 * inst.x0;
        let mut mean = (1.0 - adv.delta) * g.eval(sum_flat).unwrap();
        let perms = permutations(inst.m);
        for (atom, &w) in inst.support.iter().zip(&inst.weights) {
            for perm in &perms {
                let mut v = vec![inst.x0; adv.n];
                for (j, &i) in adv.special.indices().iter().enumerate() {
                    v[i] = atom[perm[j]];
                }
                let sum: f64 = s.indices().iter().map(|&i| v[i]).sum();
                mean += adv.delta * w * g.eval(sum).unwrap() / perms.len() as f64;
            }
        }
        mean
    }

    #[test]
    fn nonpoly_means_are_flat_off_the_special_subset() {
        for (n, k) in [(4, 2), (5, 2), (6, 3)] {
            let (inst, g) = mnl_instance(k, if k == 2 { 50 } else { 20 });
            let special = SubsetAction::from_rank(1, n, k).unwrap();
            let adv =
                HardAdversary::new(HardVariant::NonPoly, inst.clone(), g.clone(), special.clone(), n, k, 0.3).unwrap();
            let base = g.eval(k as f64 * inst.x0).unwrap();
            for idx in subsets(n, k) {
                let s = SubsetAction::from_indices(idx, n).unwrap();
                let mean = adv.mixture_mean(&s).unwrap();
                assert!((mean - oracle_mean(&adv, &s)).abs() < 1e-12);
                if s == special {
                    assert!((mean - (base + 0.3 * inst.gamma)).abs() < 1e-9);
                } else {
                    assert!((mean - base).abs() < 1e-9, "{:?}: {mean} vs {base}", s.indices());
                }
            }
        }
    }

    #[test]
    fn draws_keep_off_special_coordinates_at_x0() {
        let (inst, g) = mnl_instance(2, 50);
        let special = SubsetAction::from_indices(vec![1, 3], 5).unwrap();
        let mut adv = HardAdversary::new(HardVariant::NonPoly, inst.clone(), g, special, 5, 2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut informative = 0;
        for t in 1..=2000 {
            let v = adv.draw(t, &[], &mut rng).unwrap();
            for i in [0, 2, 4] {
                assert_eq!(v.values()[i], inst.x0);
            }
            if v.values()[1] != inst.x0 || v.values()[3] != inst.x0 {
                informative += 1;
            }
        }
        // atoms may coincide with x0, so this only bounds from above
        assert!(informative <= 1200);
    }

    #[test]
    fn tiny_delta_almost_always_flat() {
        let (inst, g) = mnl_instance(2, 50);
        let special = SubsetAction::from_indices(vec![0, 1], 4).unwrap();
        let mut adv = HardAdversary::new(HardVariant::NonPoly, inst.clone(), g, special, 4, 2, 1e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let flat =
            (0..1000).filter(|&t| adv.draw(t, &[], &mut rng).unwrap().values().iter().all(|&x| x == inst.x0)).count();
        assert!(flat >= 999);
    }

    #[test]
    fn monte_carlo_mean_reward_matches_mixture() {
        let (inst, g) = mnl_instance(2, 50);
        let special = SubsetAction::from_indices(vec![0, 1], 4).unwrap();
        let mut adv = HardAdversary::new(HardVariant::NonPoly, inst, g.clone(), special.clone(), 4, 2, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws = 100_000;
        for s in [special.clone(), SubsetAction::from_indices(vec![0, 2], 4).unwrap()] {
            let mut acc = 0.0;
            for t in 0..draws {
                let v = adv.draw(t, &[], &mut rng).unwrap();
                acc += g.eval(v.subset_sum(&s)).unwrap();
            }
            let mc = acc / draws as f64;
            let exact = adv.mixture_mean(&s).unwrap();
            // g stays in [0, 1/2] here so its standard deviation is below 1/4
            assert!((mc - exact).abs() < 3.0 * 0.25 / (draws as f64).sqrt(), "{mc} vs {exact}");
        }
    }

    #[test]
    fn poly_variant_is_informative_only_on_supersets() {
        // degree-2 link, instance with m = d = 2, played with K = 3
        let g = Link::polynomial(vec![0.0, 0.0, 1.0 / 9.0], 3.0).unwrap();
        let inst = find_hard_instance(&g, 2, 3.0, 20, &default_x0_candidates()).unwrap();
        assert!(inst.gamma > 1e-4);
        let (n, k) = (5, 3);
        let special = SubsetAction::from_indices(vec![1, 4], n).unwrap();
        let adv = HardAdversary::new(HardVariant::Poly, inst.clone(), g.clone(), special.clone(), n, k, 0.4).unwrap();
        let base = g.eval(3.0 * inst.x0).unwrap();
        let mut optimal = 0;
        for idx in subsets(n, k) {
            let s = SubsetAction::from_indices(idx, n).unwrap();
            let mean = adv.mixture_mean(&s).unwrap();
            assert!((mean - oracle_mean(&adv, &s)).abs() < 1e-12);
            if adv.is_informative(&s) {
                optimal += 1;
                assert!((mean - (base + 0.4 * inst.gamma)).abs() < 1e-9);
            } else {
                assert!((mean - base).abs() < 1e-9);
            }
        }
        // supersets of a 2-set inside [0, 5) of size 3
        assert_eq!(optimal, 3);
    }

    #[test]
    fn each_action_contains_c_k_d_subsets() {
        let (n, k, d) = (5, 3, 2);
        for idx in subsets(n, k) {
            let s = SubsetAction::from_indices(idx, n).unwrap();
            let inside = subsets(n, d)
                .filter(|sub| SubsetAction::from_indices(sub.clone(), n).unwrap().is_subset_of(&s))
                .count();
            assert_eq!(inside, 3);
        }
    }

    #[test]
    fn single_special_arm_for_d_one() {
        let g = Link::polynomial(vec![0.0, 0.25], 2.0).unwrap();
        // any distribution is "hard" for m = 1: use the point mass at 1
        let inst = find_hard_instance(&g, 1, 2.0, 20, &default_x0_candidates()).unwrap();
        let special = SubsetAction::from_indices(vec![2], 4).unwrap();
        let adv = HardAdversary::new(HardVariant::Poly, inst, g, special, 4, 2, 1.0).unwrap();
        let best = adv.optimal_mean();
        for idx in subsets(4, 2) {
            let s = SubsetAction::from_indices(idx, 4).unwrap();
            let m = adv.mixture_mean(&s).unwrap();
            assert_eq!(s.contains(2), (m - best).abs() < 1e-12);
        }
    }

    #[test]
    fn mnl_mixture_choice_law_is_flat_off_special() {
        for k in [2, 3] {
            let n = k + 2;
            let (inst, g) = mnl_instance(k, if k == 2 { 50 } else { 20 });
            let special = SubsetAction::from_rank(0, n, k).unwrap();
            let adv = HardAdversary::new(HardVariant::Mnl, inst.clone(), g, special.clone(), n, k, 0.6).unwrap();
            let denom = 1.0 + k as f64 * inst.x0;
            for idx in subsets(n, k) {
                let s = SubsetAction::from_indices(idx, n).unwrap();
                let law = adv.mixture_choice_law(&s).unwrap();
                assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                if s == special {
                    continue;
                }
                assert!((law[0] - 1.0 / denom).abs() < 1e-9);
                for &p in &law[1..] {
                    assert!((p - inst.x0 / denom).abs() < 1e-9, "{law:?}");
                }
            }
        }
    }

    #[test]
    fn mnl_monte_carlo_choice_frequencies() {
        let (inst, g) = mnl_instance(2, 50);
        let n = 4;
        let special = SubsetAction::from_indices(vec![0, 1], n).unwrap();
        let mut adv = HardAdversary::new(HardVariant::Mnl, inst, g, special, n, 2, 1.0).unwrap();
        let s = SubsetAction::from_indices(vec![1, 2], n).unwrap();
        let law = adv.mixture_choice_law(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let draws = 100_000;
        let mut counts = [0usize; 3];
        for t in 0..draws {
            let v = adv.draw(t, &[], &mut rng).unwrap();
            match mnl_sample_choice(&s, &v, &mut rng) {
                None => counts[0] += 1,
                Some(1) => counts[1] += 1,
                Some(2) => counts[2] += 1,
                Some(i) => panic!("item {i} not offered"),
            }
        }
        for (c, p) in counts.iter().zip(&law) {
            let f = *c as f64 / draws as f64;
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((f - p).abs() < 3.0 * sd + 1e-12, "{f} vs {p}");
        }
    }

    #[test]
    fn refuses_bad_setups() {
        let (inst, g) = mnl_instance(2, 50);
        let special = SubsetAction::from_indices(vec![0, 1], 4).unwrap();
        let mk = |variant, inst: HardInstance, g: Link, special: SubsetAction, k, delta| {
            HardAdversary::new(variant, inst, g, special, 4, k, delta)
        };
        assert!(mk(HardVariant::NonPoly, inst.clone(), g.clone(), special.clone(), 2, 0.0).is_err());
        assert!(mk(HardVariant::NonPoly, inst.clone(), g.clone(), special.clone(), 2, 1.5).is_err());
        assert!(mk(HardVariant::NonPoly, inst.clone(), g.clone(), special.clone(), 3, 0.5).is_err());
        assert!(mk(HardVariant::Poly, inst.clone(), g.clone(), special.clone(), 2, 0.5).is_err());
        let three = SubsetAction::from_indices(vec![0, 1, 2], 4).unwrap();
        assert!(mk(HardVariant::NonPoly, inst.clone(), g.clone(), three, 2, 0.5).is_err());
        let lin = Link::polynomial(vec![0.0, 0.3], 2.0).unwrap();
        assert!(mk(HardVariant::Mnl, inst.clone(), lin, special.clone(), 2, 0.5).is_err());
        let flat = HardInstance::point_mass(inst.x0, 2, 2.0);
        assert!(mk(HardVariant::NonPoly, flat, g, special, 2, 0.5).is_err());
    }
}
