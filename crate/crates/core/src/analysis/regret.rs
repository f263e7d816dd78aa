use serde::Serialize;

use crate::env::{EnvRecord, RewardModel};
use crate::error::{Error, Result};
use crate::subset::{subset_count, subsets, SubsetAction};

/// Per-round pseudo-regret against the best fixed subset of the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub benchmark: SubsetAction,
    /// `sum_t R(S*, v_t)`.
    pub benchmark_total: f64,
    /// `R(S*, v_t)` per round.
    pub benchmark_values: Vec<f64>,
    /// `R(S_t, v_t)` per round.
    pub played_values: Vec<f64>,
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Regret for actions `S_1..S_T` given exact expected rewards `mean(t, S)`
/// (`t` is 1-based). The benchmark maximizes `sum_t mean(t, S)` over all
/// size-K subsets; ties go to the smallest rank.
pub fn regret_from_means<F>(
    actions: &[SubsetAction],
    n: usize,
    k: usize,
    cap: usize,
    mut mean: F,
) -> Result<RegretTrace>
where
    F: FnMut(usize, &SubsetAction) -> Result<f64>,
{
    subset_count(n, k, cap)?;
    if let Some(a) = actions.iter().find(|a| a.len() != k || a.indices().iter().any(|&i| i >= n)) {
        return Err(Error::invalid(format!("action {:?} is not a size-{k} subset of [0, {n})", a.indices())));
    }
    let all: Vec<SubsetAction> = subsets(n, k).map(|idx| SubsetAction::from_indices(idx, n)).collect::<Result<_>>()?;
    let mut totals = vec![0.0; all.len()];
    let mut played_values = Vec::with_capacity(actions.len());
    for (i, action) in actions.iter().enumerate() {
        let t = i + 1;
        for (tot, s) in totals.iter_mut().zip(&all) {
            *tot += mean(t, s)?;
        }
        played_values.push(mean(t, action)?);
    }
    let mut best = 0;
    for (r, &tot) in totals.iter().enumerate() {
        if tot > totals[best] {
            best = r;
        }
    }
    let benchmark = all[best].clone();
    let benchmark_values = (1..=actions.len()).map(|t| mean(t, &benchmark)).collect::<Result<Vec<f64>>>()?;
    let instantaneous: Vec<f64> = benchmark_values.iter().zip(&played_values).map(|(b, p)| b - p).collect();
    let cumulative = instantaneous
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    Ok(RegretTrace {
        benchmark,
        benchmark_total: totals[best],
        benchmark_values,
        played_values,
        instantaneous,
        cumulative,
    })
}

/// Regret of a recorded run on its realized hidden vectors `v_t`.
pub fn regret_of_run(records: &[EnvRecord], model: &RewardModel, k: usize, cap: usize) -> Result<RegretTrace> {
    let n = records.first().map_or(0, |r| r.hidden.len());
    if records.is_empty() {
        return Err(Error::invalid("no records"));
    }
    let actions: Vec<SubsetAction> = records.iter().map(|r| r.action.clone()).collect();
    regret_from_means(&actions, n, k, cap, |t, s| model.expected(s, &records[t - 1].hidden))
}
