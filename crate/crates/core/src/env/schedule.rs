use std::path::Path;

use rand::RngCore;

use super::{Adversary, EnvRecord, RewardModel};
use crate::error::{Error, Result};
use crate::reward::RewardVector;
use crate::subset::SubsetAction;

/// Fixed sequence `v_1, ..., v_T` chosen in advance. With an MNL reward model
/// and arbitrary prices this is the general assortment environment.
#[derive(Debug, Clone)]
pub struct Oblivious {
    schedule: Vec<RewardVector>,
    model: RewardModel,
    k: usize,
}

impl Oblivious {
    pub fn new(schedule: Vec<RewardVector>, model: RewardModel, k: usize) -> Result<Self> {
        let n = schedule.first().ok_or_else(|| Error::invalid("empty schedule"))?.len();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 <= K <= N, got N={n}, K={k}")));
        }
        if let Some(t) = schedule.iter().position(|v| v.len() != n) {
            return Err(Error::invalid(format!("round {} has {} entries, expected {n}", t + 1, schedule[t].len())));
        }
        model.validate(n)?;
        Ok(Self { schedule, model, k })
    }

    pub fn mnl(schedule: Vec<RewardVector>, prices: Vec<f64>, k: usize) -> Result<Self> {
        Self::new(schedule, RewardModel::Mnl { prices }, k)
    }

    pub fn horizon(&self) -> usize {
        self.schedule.len()
    }

    pub fn schedule(&self) -> &[RewardVector] {
        &self.schedule
    }

    fn at(&self, t: usize) -> Result<&RewardVector> {
        t.checked_sub(1)
            .and_then(|i| self.schedule.get(i))
            .ok_or_else(|| Error::invalid(format!("round {t} outside the schedule of length {}", self.schedule.len())))
    }
}

impl Adversary for Oblivious {
    fn dims(&self) -> (usize, usize) {
        (self.schedule[0].len(), self.k)
    }

    fn model(&self) -> &RewardModel {
        &self.model
    }

    fn draw(&mut self, t: usize, _history: &[EnvRecord], _rng: &mut dyn RngCore) -> Result<RewardVector> {
        self.at(t).cloned()
    }

    fn mean_reward(&self, t: usize, s: &SubsetAction) -> Result<Option<f64>> {
        self.model.expected(s, self.at(t)?).map(Some)
    }
}

/// The same `v` every round; only the feedback is random.
#[derive(Debug, Clone)]
pub struct Stochastic {
    v: RewardVector,
    model: RewardModel,
    k: usize,
}

impl Stochastic {
    pub fn new(v: RewardVector, model: RewardModel, k: usize) -> Result<Self> {
        let n = v.len();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 <= K <= N, got N={n}, K={k}")));
        }
        model.validate(n)?;
        Ok(Self { v, model, k })
    }

    pub fn values(&self) -> &RewardVector {
        &self.v
    }
}

impl Adversary for Stochastic {
    fn dims(&self) -> (usize, usize) {
        (self.v.len(), self.k)
    }

    fn model(&self) -> &RewardModel {
        &self.model
    }

    fn draw(&mut self, _t: usize, _history: &[EnvRecord], _rng: &mut dyn RngCore) -> Result<RewardVector> {
        Ok(self.v.clone())
    }

    fn mean_reward(&self, _t: usize, s: &SubsetAction) -> Result<Option<f64>> {
        self.model.expected(s, &self.v).map(Some)
    }
}

/// Reads a schedule CSV with header `t,v_0,...,v_{N-1}` and rows `t = 1..=T`.
pub fn load_schedule(path: impl AsRef<Path>) -> Result<Vec<RewardVector>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let n = headers.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string()).chain((0..n).map(|i| format!("v_{i}"))).collect();
    if n == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::invalid(format!("schedule header must be t,v_0,...,v_{{N-1}}, got {headers:?}")));
    }
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let t: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad round index {:?} on row {}", &record[0], row + 1)))?;
        if t != row + 1 {
            return Err(Error::invalid(format!("row {} has t={t}; rounds must run 1, 2, ...", row + 1)));
        }
        let values = record
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad value {s:?} in round {t}"))))
            .collect::<Result<Vec<f64>>>()?;
        out.push(RewardVector::new(values)?);
    }
    if out.is_empty() {
        return Err(Error::invalid("schedule has no rows"));
    }
    Ok(out)
}

/// Writes a schedule in the format accepted by [`load_schedule`].
pub fn write_schedule(path: impl AsRef<Path>, schedule: &[RewardVector]) -> Result<()> {
    let n = schedule.first().map_or(0, |v| v.len());
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let header: Vec<String> = std::iter::once("t".to_string()).chain((0..n).map(|i| format!("v_{i}"))).collect();
    w.write_record(&header)?;
    for (t, v) in schedule.iter().enumerate() {
        let row: Vec<String> =
            std::iter::once((t + 1).to_string()).chain(v.values().iter().map(|x| x.to_string())).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
