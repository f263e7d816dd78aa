//! Hidden reward vectors, expected subset rewards, the exhaustive benchmark,
//! and the tensor lift that turns a degree-d polynomial reward into a linear one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{Link, Polynomial};
use crate::subset::{subset_count, subsets, SubsetAction};

/// Default bound on the tensor dimension `N^d`.
pub const DEFAULT_TENSOR_CAP: usize = 1 << 20;

/// Per-arm values `v_t` in `[0, 1]^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardVector(Vec<f64>);

impl RewardVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("reward entry {i} = {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn subset_sum(&self, s: &SubsetAction) -> f64 {
        s.indices().iter().map(|&i| self.0[i]).sum()
    }
}

impl TryFrom<Vec<f64>> for RewardVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<RewardVector> for Vec<f64> {
    fn from(v: RewardVector) -> Vec<f64> {
        v.0
    }
}

/// Problem dimensions. `d` is only meaningful for polynomial links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDims {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

impl ProblemDims {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::invalid(format!("need 1 <= K <= N, got N={}, K={}", self.n, self.k)));
        }
        if self.t == 0 {
            return Err(Error::invalid("horizon T must be at least 1"));
        }
        if let Some(d) = self.d {
            if d == 0 || d > self.k {
                return Err(Error::invalid(format!("need 1 <= d <= K, got d={d}, K={}", self.k)));
            }
        }
        Ok(())
    }
}

/// Accepts small round-off outside `[0, 1]`; anything larger is a bug in
/// the link or its inputs.
pub(crate) fn clamp_unit(value: f64) -> Result<f64> {
    const TOL: f64 = 1e-9;
    if !(-TOL..=1.0 + TOL).contains(&value) {
        return Err(Error::Numeric(format!("expected reward {value} outside [0, 1]")));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `R(S, v) = g(sum_{i in S} v_i)`.
pub fn expected_reward(s: &SubsetAction, v: &RewardVector, g: &Link) -> Result<f64> {
    if let Some(&i) = s.indices().iter().find(|&&i| i >= v.len()) {
        return Err(Error::invalid(format!("subset index {i} outside reward vector of length {}", v.len())));
    }
    clamp_unit(g.eval(v.subset_sum(s))?)
}

/// Exhaustive argmax of [`expected_reward`] over all size-K subsets; ties go
/// to the smallest rank.
pub fn best_subset(v: &RewardVector, g: &Link, n: usize, k: usize, cap: usize) -> Result<(SubsetAction, f64)> {
    if v.len() != n {
        return Err(Error::invalid(format!("reward vector has length {}, expected {n}", v.len())));
    }
    subset_count(n, k, cap)?;
    let mut best: Option<(usize, f64)> = None;
    for (rank, idx) in subsets(n, k).enumerate() {
        let sum: f64 = idx.iter().map(|&i| v.values()[i]).sum();
        let r = clamp_unit(g.eval(sum)?)?;
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((rank, r));
        }
    }
    let (rank, value) = best.ok_or_else(|| Error::invalid("no subsets to enumerate"))?;
    Ok((SubsetAction::from_rank(rank, n, k)?, value))
}

fn tensor_len(n: usize, d: usize, cap: usize) -> Result<usize> {
    let size = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::Resource { what: "tensor features", size, cap: cap as u128 });
    }
    Ok(size as usize)
}

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// `x^{⊗d}` in row-major multi-index order.
pub fn tensor_power(x: &[f64], d: usize) -> Vec<f64> {
    (0..d).fold(vec![1.0], |acc, _| kron(&acc, x))
}

/// `1_S^{⊗d}`: entry `(i_1, ..., i_d)` is 1 iff every `i_j` is in `S`.
pub fn tensor_features(s: &SubsetAction, n: usize, d: usize, cap: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::invalid("tensor order d must be at least 1"));
    }
    tensor_len(n, d, cap)?;
    let mut indicator = vec![0.0; n];
    for &i in s.indices() {
        if i >= n {
            return Err(Error::invalid(format!("subset index {i} out of range for N={n}")));
        }
        indicator[i] = 1.0;
    }
    Ok(tensor_power(&indicator, d))
}

/// `sum_k a_k v^{⊗k} ⊗ (1/K)^{⊗(d-k)}`, so that
/// `<lift, 1_S^{⊗d}> = p(sum_{i in S} v_i)` for every size-K subset `S`.
pub fn lift_polynomial(v: &[f64], p: &Polynomial, k: usize, d: usize, cap: usize) -> Result<Vec<f64>> {
    if p.degree() > d {
        return Err(Error::invalid(format!("polynomial of degree {} cannot be lifted to order {d}", p.degree())));
    }
    if k == 0 {
        return Err(Error::invalid("subset size K must be at least 1"));
    }
    let n = v.len();
    let len = tensor_len(n, d, cap)?;
    let pad = vec![1.0 / k as f64; n];
    let mut out = vec![0.0; len];
    // v^{⊗k} ⊗ pad^{⊗(d-k)}, built by extending one factor at a time
    for (deg, &a) in p.coefficients().iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let mut term = tensor_power(v, deg);
        for _ in deg..d {
            term = kron(&term, &pad);
        }
        for (o, t) in out.iter_mut().zip(&term) {
            *o += a * t;
        }
    }
    Ok(out)
}

/// [`lift_polynomial`] for a link; fails for non-polynomial links.
pub fn lift_reward_vector(v: &RewardVector, g: &Link, k: usize, d: usize, cap: usize) -> Result<Vec<f64>> {
    let p = g.as_polynomial().ok_or_else(|| Error::invalid("tensor lift needs a polynomial link"))?;
    lift_polynomial(v.values(), p, k, d, cap)
}
