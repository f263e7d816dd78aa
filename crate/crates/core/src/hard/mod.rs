//! Exchangeable hard distributions.
//!
//! A [`HardInstance`] is a distribution `µ` on `[0,1]^m`, stored as weights on
//! sorted atoms (each atom stands for the uniform mixture over its
//! permutations), plus a baseline `x0` and shift budget `b`, such that
//!
//! ```text
//! E_µ[g_ℓ(X)] = g(b x0)            for ℓ = 1, ..., m-1
//! E_µ[g_m(X)] = g(b x0) + γ,       γ > 0
//! ```
//!
//! where `g_ℓ` is [`symmetrized_g`]. The search fixes `x0`, restricts `µ` to a
//! grid, and maximizes `γ` with a linear program; the best `x0` from a
//! candidate list wins.

pub mod lp;
pub mod symmetric;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::Link;
use crate::subset::{binomial, permutations, subsets};

pub use lp::{solve_lp, LpProblem, LpSolution};
pub use symmetric::{
    comb_identity_residual, comb_identity_scale, identity_battery, symmetrized_g, symmetrized_polynomial,
    IdentityBattery,
};

pub const DEFAULT_TOL_EQ: f64 = 1e-8;
pub const DEFAULT_TOL_GAP: f64 = 1e-6;
pub const MAX_GRID_DENOMINATOR: usize = 200;
/// Bound on LP columns (grid tuples) per candidate `x0`.
pub const DEFAULT_COLUMN_CAP: usize = 400_000;

/// `{0.05, 0.10, ..., 0.95}`.
pub fn default_x0_candidates() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstance {
    pub x0: f64,
    pub m: usize,
    pub b: f64,
    /// Sorted m-tuples in `[0, 1]^m`.
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub gamma: f64,
    /// `E_µ[g_ℓ] - g(b x0)` for ℓ = 1..m-1.
    pub residuals: Vec<f64>,
}

impl HardInstance {
    /// Point mass at `(x0, ..., x0)`: always feasible, zero gap.
    pub fn point_mass(x0: f64, m: usize, b: f64) -> Self {
        Self {
            x0,
            m,
            b,
            support: vec![vec![x0; m]],
            weights: vec![1.0],
            gamma: 0.0,
            residuals: vec![0.0; m.saturating_sub(1)],
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(s)?;
        inst.check_shape()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Structural checks; says nothing about the moment conditions.
    pub fn check_shape(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("hard instance needs m >= 1"));
        }
        if self.b < self.m as f64 {
            return Err(Error::invalid(format!("shift budget b={} below m={}", self.b, self.m)));
        }
        if !(0.0..=1.0).contains(&self.x0) {
            return Err(Error::invalid(format!("x0={} outside [0, 1]", self.x0)));
        }
        if self.support.is_empty() || self.support.len() != self.weights.len() {
            return Err(Error::invalid("support and weights must be non-empty and equally long"));
        }
        for atom in &self.support {
            if atom.len() != self.m {
                return Err(Error::invalid(format!("atom {atom:?} does not have m={} coordinates", self.m)));
            }
            if atom.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!("atom {atom:?} leaves [0, 1]")));
            }
            if atom.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid(format!("atom {atom:?} is not sorted")));
            }
        }
        if self.weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    /// `E_µ[g_ℓ(X)]` for ℓ in 1..=m, by subset averaging.
    pub fn moments(&self, g: &Link) -> Result<Vec<f64>> {
        (1..=self.m)
            .map(|ell| {
                self.support
                    .iter()
                    .zip(&self.weights)
                    .try_fold(0.0, |acc, (atom, &w)| Ok(acc + w * symmetrized_g(ell, atom, self.x0, self.b, g)?))
            })
            .collect()
    }

    /// `g(b x0)`, the uninformative mean reward.
    pub fn baseline(&self, g: &Link) -> Result<f64> {
        g.eval(self.b * self.x0)
    }
}

/// Outcome of the LP for one candidate `x0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateOutcome {
    pub x0: f64,
    pub gamma: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub struct HardSearch {
    pub best: HardInstance,
    pub candidates: Vec<CandidateOutcome>,
}

/// Multisets of size `m` from `{0, 1/q, ..., 1}`, as sorted tuples.
fn grid_tuples(m: usize, q: usize) -> Vec<Vec<f64>> {
    // sorted tuple (j_0 <= ... <= j_{m-1}) <-> strictly increasing (j_i + i)
    subsets(q + m, m).map(|c| c.iter().enumerate().map(|(i, &ci)| (ci - i) as f64 / q as f64).collect()).collect()
}

/// Maximize `E[g_m] - g(b x0)` over grid distributions for one `x0`.
pub fn solve_for_x0(g: &Link, m: usize, b: f64, q: usize, x0: f64) -> Result<(HardInstance, usize)> {
    check_search_args(g, m, b, q, std::slice::from_ref(&x0))?;
    let mut tuples = grid_tuples(m, q);
    let diagonal = vec![x0; m];
    if !tuples.contains(&diagonal) {
        tuples.push(diagonal);
    }
    let base = g.eval(b * x0)?;

    let mut sym = vec![Vec::with_capacity(tuples.len()); m];
    for atom in &tuples {
        for (ell, row) in sym.iter_mut().enumerate() {
            row.push(symmetrized_g(ell + 1, atom, x0, b, g)?);
        }
    }
    let objective = sym.pop().expect("m >= 1");
    let mut rows: Vec<Vec<f64>> = sym.into_iter().map(|row| row.into_iter().map(|v| v - base).collect()).collect();
    rows.push(vec![1.0; tuples.len()]);
    let mut rhs = vec![0.0; m - 1];
    rhs.push(1.0);
    let problem = LpProblem::new(objective, rows, rhs)?;
    let sol = solve_lp(&problem)?;

    let mut support = Vec::new();
    let mut weights = Vec::new();
    let mut kept = Vec::new();
    for (j, &w) in sol.weights.iter().enumerate() {
        if w > 1e-14 {
            support.push(tuples[j].clone());
            weights.push(w);
            kept.push(j);
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let residuals =
        problem.rows[..m - 1].iter().map(|row| kept.iter().zip(&weights).map(|(&j, w)| w * row[j]).sum()).collect();
    let top: f64 = kept.iter().zip(&weights).map(|(&j, w)| w * problem.objective[j]).sum();
    let inst = HardInstance { x0, m, b, support, weights, gamma: top - base, residuals };
    Ok((inst, sol.iterations))
}

fn check_search_args(g: &Link, m: usize, b: f64, q: usize, x0s: &[f64]) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    if !(b >= m as f64) {
        return Err(Error::invalid(format!("shift budget b={b} must be at least m={m}")));
    }
    if b > g.domain_max() + crate::link::SLACK {
        return Err(Error::invalid(format!("shift budget b={b} exceeds the link domain [0, {}]", g.domain_max())));
    }
    if q == 0 || q > MAX_GRID_DENOMINATOR {
        return Err(Error::invalid(format!("grid step must be 1/q with 1 <= q <= {MAX_GRID_DENOMINATOR}, got q={q}")));
    }
    if x0s.is_empty() || x0s.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
        return Err(Error::invalid("x0 candidates must be a non-empty subset of (0, 1)"));
    }
    let columns = binomial(q + m, m);
    if columns > DEFAULT_COLUMN_CAP as u128 {
        return Err(Error::Resource { what: "hard-instance grid", size: columns, cap: DEFAULT_COLUMN_CAP as u128 });
    }
    Ok(())
}

/// Runs [`solve_for_x0`] for every candidate (in parallel) and keeps the
/// largest gap; ties go to the earliest candidate.
pub fn search_hard_instance(g: &Link, m: usize, b: f64, q: usize, x0_candidates: &[f64]) -> Result<HardSearch> {
    check_search_args(g, m, b, q, x0_candidates)?;
    let outcomes: Vec<Result<(HardInstance, usize)>> =
        x0_candidates.par_iter().map(|&x0| solve_for_x0(g, m, b, q, x0)).collect();
    let mut best: Option<HardInstance> = None;
    let mut candidates = Vec::with_capacity(outcomes.len());
    for res in outcomes {
        let (inst, pivots) = res?;
        candidates.push(CandidateOutcome { x0: inst.x0, gamma: inst.gamma, pivots });
        if best.as_ref().is_none_or(|b| inst.gamma > b.gamma) {
            best = Some(inst);
        }
    }
    Ok(HardSearch { best: best.expect("at least one candidate"), candidates })
}

/// The max-gap instance over `x0_candidates` for grid step `1/q`.
pub fn find_hard_instance(g: &Link, m: usize, b: f64, q: usize, x0_candidates: &[f64]) -> Result<HardInstance> {
    Ok(search_hard_instance(g, m, b, q, x0_candidates)?.best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    /// Recomputed `E_µ[g_ℓ] - g(b x0)`, ℓ = 1..m-1.
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
    /// Recomputed gap.
    pub gamma: f64,
    pub weight_sum: f64,
    pub valid: bool,
    pub failures: Vec<String>,
}

/// Average of `g(x_{σ(1)} + ... + x_{σ(ℓ)} + (b-ℓ) x0)` over every
/// permutation σ, for ℓ = 1..=m. This is the exchangeable expectation
/// itself, evaluated without the subset-averaging shortcut.
fn permutation_moments(atom: &[f64], x0: f64, b: f64, g: &Link) -> Result<Vec<f64>> {
    let m = atom.len();
    let perms = permutations(m);
    let mut sums = vec![0.0; m];
    for perm in &perms {
        let mut prefix = 0.0;
        for ell in 1..=m {
            prefix += atom[perm[ell - 1]];
            sums[ell - 1] += g.eval(prefix + (b - ell as f64) * x0)?;
        }
    }
    Ok(sums.into_iter().map(|s| s / perms.len() as f64).collect())
}

/// Largest `m` for which verification enumerates permutations; beyond it,
/// subset averaging is used.
const PERMUTATION_LIMIT: usize = 7;

/// Recomputes the moment conditions from the atoms and link.
pub fn verify_hard_instance(inst: &HardInstance, g: &Link, tol_eq: f64, tol_gap: f64) -> VerifyReport {
    let mut failures = Vec::new();
    if let Err(e) = inst.check_shape() {
        failures.push(e.to_string());
    }
    let weight_sum: f64 = inst.weights.iter().sum();
    let mut moments = vec![0.0; inst.m];
    let mut eval_ok = failures.is_empty();
    if eval_ok {
        for (atom, &w) in inst.support.iter().zip(&inst.weights) {
            let per_atom = if inst.m <= PERMUTATION_LIMIT {
                permutation_moments(atom, inst.x0, inst.b, g)
            } else {
                inst.moments(g)
            };
            match per_atom {
                Ok(v) => {
                    for (mo, x) in moments.iter_mut().zip(v) {
                        *mo += w * x;
                    }
                }
                Err(e) => {
                    failures.push(e.to_string());
                    eval_ok = false;
                    break;
                }
            }
        }
    }
    let base = if eval_ok {
        match g.eval(inst.b * inst.x0) {
            Ok(v) => v,
            Err(e) => {
                failures.push(e.to_string());
                eval_ok = false;
                f64::NAN
            }
        }
    } else {
        f64::NAN
    };
    let (residuals, gamma) = if eval_ok {
        (moments[..inst.m - 1].iter().map(|v| v - base).collect::<Vec<_>>(), moments[inst.m - 1] - base)
    } else {
        (vec![f64::NAN; inst.m.saturating_sub(1)], f64::NAN)
    };
    let max_abs_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if eval_ok {
        if !(max_abs_residual <= tol_eq) {
            failures.push(format!("max |residual| {max_abs_residual:.3e} exceeds {tol_eq:.1e}"));
        }
        if !(gamma >= tol_gap) {
            failures.push(format!("gap {gamma:.3e} below {tol_gap:.1e}"));
        }
    }
    VerifyReport { residuals, max_abs_residual, gamma, weight_sum, valid: failures.is_empty(), failures }
}
