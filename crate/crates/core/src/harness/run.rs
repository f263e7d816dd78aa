use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    AdversaryConfig, AlgorithmConfig, DeltaConfig, ExperimentConfig, InstanceSource, RegretBasis, ScheduleSource,
};
use crate::algo::{constant_policy, Exp2, Learner, MabAlgorithm, MabLearner};
use crate::analysis::{mean_and_stderr, regret_from_means, RegretTrace};
use crate::env::{
    delta_schedule, load_schedule, play_round, Adversary, DeltaMode, EnvRecord, HardAdversary, HardVariant, Oblivious,
    RewardModel, Stochastic,
};
use crate::error::{Error, Result};
use crate::hard::{default_x0_candidates, find_hard_instance, HardInstance};
use crate::link::Link;
use crate::reward::RewardVector;
use crate::subset::{SubsetAction, DEFAULT_SUBSET_CAP};

/// Everything a run needs that is shared across replications.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub link: Link,
    pub instance: Option<HardInstance>,
    pub schedule: Option<Vec<RewardVector>>,
    /// Γ of the hard adversary, when there is one.
    pub kl_coefficient: Option<f64>,
    pub config_hash: String,
}

impl Prepared {
    /// Loads or searches the hard instance and schedule, then checks that an
    /// adversary can be built.
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let k = config.dims.k;
        let link = config.link.build(k as f64)?;
        let (instance, schedule) = match &config.adversary {
            AdversaryConfig::HardNonPoly { instance, .. } | AdversaryConfig::MnlHard { instance, .. } => {
                (Some(resolve_instance(instance, &link, k, k)?), None)
            }
            AdversaryConfig::HardPoly { instance, .. } => {
                let d = config.dims.d.expect("validated");
                (Some(resolve_instance(instance, &link, d, k)?), None)
            }
            AdversaryConfig::MnlGeneral { schedule, .. } | AdversaryConfig::Oblivious { schedule } => {
                (None, Some(resolve_schedule(schedule)?))
            }
            AdversaryConfig::Stochastic { .. } => (None, None),
        };
        let mut prepared = Prepared {
            config: config.clone(),
            link,
            instance,
            schedule,
            kl_coefficient: None,
            config_hash: config.hash(),
        };
        if prepared.instance.is_some() {
            let probe = prepared.hard_adversary(1.0)?;
            prepared.kl_coefficient = Some(probe.kl_coefficient()?);
        }
        if let Some(s) = &prepared.schedule {
            let need = config.horizons().into_iter().max().unwrap_or(config.dims.t);
            if s.len() < need {
                return Err(Error::invalid(format!("schedule has {} rounds, horizon needs {need}", s.len())));
            }
            if s[0].len() != config.dims.n {
                return Err(Error::invalid(format!("schedule has {} items, expected N={}", s[0].len(), config.dims.n)));
            }
        }
        Ok(prepared)
    }

    fn hard_adversary(&self, delta: f64) -> Result<HardAdversary> {
        let (n, k) = (self.config.dims.n, self.config.dims.k);
        let inst = self.instance.clone().ok_or_else(|| Error::invalid("no hard instance"))?;
        let (variant, special) = match &self.config.adversary {
            AdversaryConfig::HardNonPoly { special, .. } => (HardVariant::NonPoly, special.clone()),
            AdversaryConfig::HardPoly { special, .. } => (HardVariant::Poly, special.clone()),
            AdversaryConfig::MnlHard { special, .. } => (HardVariant::Mnl, special.clone()),
            _ => return Err(Error::invalid("not a hard adversary")),
        };
        let special = SubsetAction::from_indices(special.unwrap_or_else(|| (0..inst.m).collect()), n)?;
        HardAdversary::new(variant, inst, self.link.clone(), special, n, k, delta)
    }

    /// δ used at horizon `t`, for hard adversaries.
    pub fn delta_at(&self, t: usize) -> Option<f64> {
        let (n, k) = (self.config.dims.n, self.config.dims.k);
        let (delta, mode) = match &self.config.adversary {
            AdversaryConfig::HardNonPoly { delta, .. } | AdversaryConfig::MnlHard { delta, .. } => {
                (delta, DeltaMode::NonPoly)
            }
            AdversaryConfig::HardPoly { delta, .. } => (delta, DeltaMode::Poly(self.config.dims.d?)),
            _ => return None,
        };
        Some(match delta {
            DeltaConfig::Fixed(d) => *d,
            DeltaConfig::Auto => delta_schedule(n, k, t, mode, self.kl_coefficient?),
        })
    }

    pub fn adversary(&self, t: usize) -> Result<Box<dyn Adversary>> {
        let k = self.config.dims.k;
        Ok(match &self.config.adversary {
            AdversaryConfig::HardNonPoly { .. }
            | AdversaryConfig::HardPoly { .. }
            | AdversaryConfig::MnlHard { .. } => {
                let delta = self.delta_at(t).ok_or_else(|| Error::invalid("δ unavailable"))?;
                Box::new(self.hard_adversary(delta)?)
            }
            AdversaryConfig::MnlGeneral { prices, .. } => {
                Box::new(Oblivious::mnl(self.schedule_prefix(t), prices.clone(), k)?)
            }
            AdversaryConfig::Oblivious { .. } => {
                Box::new(Oblivious::new(self.schedule_prefix(t), RewardModel::Link(self.link.clone()), k)?)
            }
            AdversaryConfig::Stochastic { values } => {
                Box::new(Stochastic::new(RewardVector::new(values.clone())?, RewardModel::Link(self.link.clone()), k)?)
            }
        })
    }

    fn schedule_prefix(&self, t: usize) -> Vec<RewardVector> {
        let s = self.schedule.as_ref().expect("schedule loaded");
        s[..t.min(s.len())].to_vec()
    }

    pub fn learner(&self, algo: &AlgorithmConfig, t: usize) -> Result<Box<dyn Learner>> {
        let (n, k) = (self.config.dims.n, self.config.dims.k);
        Ok(match algo {
            AlgorithmConfig::Exp3 { mixing } => {
                Box::new(MabLearner::new(MabAlgorithm::Exp3 { mixing: *mixing }, n, k)?)
            }
            AlgorithmConfig::TsallisInf => Box::new(MabLearner::tsallis_inf(n, k)?),
            AlgorithmConfig::Exp2 { .. } => {
                let d = self.config.exp2_order(&self.link)?;
                Box::new(Exp2::new(n, k, d, t, algo.exp2_params().expect("exp2 config"))?)
            }
            AlgorithmConfig::Constant { subset } => {
                Box::new(constant_policy(SubsetAction::from_indices(subset.clone(), n)?))
            }
        })
    }
}

fn resolve_instance(src: &InstanceSource, link: &Link, m: usize, k: usize) -> Result<HardInstance> {
    let inst = match src {
        InstanceSource::File(path) => HardInstance::from_json(&std::fs::read_to_string(path)?)?,
        InstanceSource::Search { grid, x0_candidates } => {
            let cands = x0_candidates.clone().unwrap_or_else(default_x0_candidates);
            find_hard_instance(link, m, k as f64, *grid, &cands)?
        }
    };
    if inst.m != m {
        return Err(Error::invalid(format!("instance has m={}, expected {m}", inst.m)));
    }
    Ok(inst)
}

fn resolve_schedule(src: &ScheduleSource) -> Result<Vec<RewardVector>> {
    match src {
        ScheduleSource::File(path) => load_schedule(path),
        ScheduleSource::Rows(rows) => rows.iter().map(|r| RewardVector::new(r.clone())).collect(),
    }
}

/// One simulated interaction.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<EnvRecord>,
    pub trace: RegretTrace,
}

/// Plays `horizon` rounds of select, environment step, update, then computes
/// the regret trace on the requested basis.
pub fn simulate(
    adversary: &mut dyn Adversary,
    learner: &mut dyn Learner,
    horizon: usize,
    seed: u64,
    basis: RegretBasis,
) -> Result<Simulation> {
    let (n, k) = adversary.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records: Vec<EnvRecord> = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let action = learner.select(&mut rng)?;
        let rec = play_round(adversary, t, &records, &action, &mut rng)?;
        learner.update(&action, rec.reward)?;
        records.push(rec);
    }
    let actions: Vec<SubsetAction> = records.iter().map(|r| r.action.clone()).collect();
    let trace = match basis {
        RegretBasis::Expected => regret_from_means(&actions, n, k, DEFAULT_SUBSET_CAP, |t, s| {
            adversary
                .mean_reward(t, s)?
                .ok_or_else(|| Error::invalid("adversary has no closed-form mean; use the realized basis"))
        })?,
        RegretBasis::Realized => {
            let model = adversary.model().clone();
            regret_from_means(&actions, n, k, DEFAULT_SUBSET_CAP, |t, s| model.expected(s, &records[t - 1].hidden))?
        }
    };
    Ok(Simulation { records, trace })
}

/// A checkpoint of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub subset_rank: usize,
    pub reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub run_id: usize,
    pub seed: u64,
    pub config_hash: String,
    pub algorithm: String,
    pub horizon: usize,
    pub delta: Option<f64>,
    pub rows: Vec<TraceRow>,
    pub final_regret: f64,
    pub benchmark_rank: usize,
    /// Not part of any written output.
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFailure {
    pub run_id: usize,
    pub seed: u64,
    pub algorithm: String,
    pub horizon: usize,
    pub error: String,
}

pub type RunOutcome = std::result::Result<RunResult, RunFailure>;

/// Rounds kept when downsampling: about `count` log-spaced values in `1..=T`,
/// always including `T`.
pub fn log_checkpoints(horizon: usize, count: usize) -> Vec<usize> {
    if count >= horizon {
        return (1..=horizon).collect();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let frac = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
            ((horizon as f64).powf(frac).round() as usize).clamp(1, horizon)
        })
        .collect();
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    out
}

fn run_one(prepared: &Prepared, algo: &AlgorithmConfig, horizon: usize, run_id: usize, rep: usize) -> RunOutcome {
    let seed = prepared.config.base_seed.wrapping_add(rep as u64);
    let start = Instant::now();
    let result = (|| -> Result<RunResult> {
        let mut adversary = prepared.adversary(horizon)?;
        let mut learner = prepared.learner(algo, horizon)?;
        let sim = simulate(adversary.as_mut(), learner.as_mut(), horizon, seed, prepared.config.regret_basis)?;
        let keep = if prepared.config.full_trace {
            (1..=horizon).collect()
        } else {
            log_checkpoints(horizon, prepared.config.checkpoints)
        };
        let rows = keep
            .into_iter()
            .map(|t| TraceRow {
                t,
                subset_rank: sim.records[t - 1].action.rank(),
                reward: sim.records[t - 1].reward,
                inst_regret: sim.trace.instantaneous[t - 1],
                cum_regret: sim.trace.cumulative[t - 1],
            })
            .collect();
        Ok(RunResult {
            run_id,
            seed,
            config_hash: prepared.config_hash.clone(),
            algorithm: algo.label().to_string(),
            horizon,
            delta: prepared.delta_at(horizon),
            rows,
            final_regret: sim.trace.final_regret(),
            benchmark_rank: sim.trace.benchmark.rank(),
            wall_time_secs: 0.0,
        })
    })();
    match result {
        Ok(mut r) => {
            r.wall_time_secs = start.elapsed().as_secs_f64();
            Ok(r)
        }
        Err(e) => {
            log::error!("run {run_id} (seed {seed}) failed: {e}");
            Err(RunFailure { run_id, seed, algorithm: algo.label().to_string(), horizon, error: e.to_string() })
        }
    }
}

/// Thread pool sized by `NONLIN_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("NONLIN_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::invalid(format!("NONLIN_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Numeric(format!("thread pool: {e}")))
}

/// Runs every replication of the config's single algorithm at `dims.t`.
/// Results are ordered by run id.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    if config.algorithms.len() != 1 {
        return Err(Error::invalid(format!("run takes exactly one algorithm, got {}", config.algorithms.len())));
    }
    let prepared = Prepared::new(config)?;
    let algo = &config.algorithms[0];
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        (0..config.replications).into_par_iter().map(|r| run_one(&prepared, algo, config.dims.t, r, r)).collect()
    }))
}

/// One sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub algo: String,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    /// Successful replications.
    pub reps: usize,
    pub mean_regret: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<RunFailure>,
    pub config_hash: String,
}

/// Every horizon in the grid times every algorithm, `replications` runs each.
/// Rows are ordered by horizon, then algorithm in config order.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let prepared = Prepared::new(config)?;
    let horizons = config.horizons();
    let reps = config.replications;
    let cells: Vec<(usize, usize)> =
        horizons.iter().flat_map(|&t| (0..config.algorithms.len()).map(move |a| (t, a))).collect();
    let jobs: Vec<(usize, usize, usize)> = cells.iter().flat_map(|&(t, a)| (0..reps).map(move |r| (t, a, r))).collect();
    let pool = thread_pool()?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(id, &(t, a, r))| run_one(&prepared, &config.algorithms[a], t, id, r))
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (cell, chunk) in cells.iter().zip(outcomes.chunks(reps)) {
        let mut finals = Vec::new();
        for o in chunk {
            match o {
                Ok(r) => finals.push(r.final_regret),
                Err(f) => failures.push(f.clone()),
            }
        }
        let (mean, se) = mean_and_stderr(&finals);
        rows.push(SweepRow {
            algo: config.algorithms[cell.1].label().to_string(),
            n: config.dims.n,
            k: config.dims.k,
            t: cell.0,
            reps: finals.len(),
            mean_regret: mean,
            stderr: se,
        });
    }
    Ok(SweepResult { rows, failures, config_hash: prepared.config_hash })
}

fn failures_path(output: &Path) -> PathBuf {
    let mut name = output.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".failures.csv");
    output.with_file_name(name)
}

/// Writes `run_id,seed,t,subset_rank,reward,inst_regret,cum_regret`. Failed
/// runs go to a sibling `<stem>.failures.csv`.
pub fn write_run_csv(path: &Path, outcomes: &[RunOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run_id", "seed", "t", "subset_rank", "reward", "inst_regret", "cum_regret"])?;
    let mut failed = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => {
                for row in &r.rows {
                    w.write_record(&[
                        r.run_id.to_string(),
                        r.seed.to_string(),
                        row.t.to_string(),
                        row.subset_rank.to_string(),
                        row.reward.to_string(),
                        row.inst_regret.to_string(),
                        row.cum_regret.to_string(),
                    ])?;
                }
            }
            Err(f) => failed.push(f.clone()),
        }
    }
    w.flush()?;
    write_failures(path, &failed)
}

/// Writes `algo,N,K,T,reps,mean_regret,stderr`.
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["algo", "N", "K", "T", "reps", "mean_regret", "stderr"])?;
    for r in &result.rows {
        w.write_record(&[
            r.algo.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.t.to_string(),
            r.reps.to_string(),
            r.mean_regret.to_string(),
            r.stderr.to_string(),
        ])?;
    }
    w.flush()?;
    write_failures(path, &result.failures)
}

fn write_failures(path: &Path, failed: &[RunFailure]) -> Result<()> {
    let fpath = failures_path(path);
    if failed.is_empty() {
        if fpath.exists() {
            std::fs::remove_file(&fpath)?;
        }
        return Ok(());
    }
    let mut w = csv::Writer::from_path(&fpath)?;
    w.write_record(["run_id", "seed", "algo", "T", "error"])?;
    for f in failed {
        w.write_record(&[
            f.run_id.to_string(),
            f.seed.to_string(),
            f.algorithm.clone(),
            f.horizon.to_string(),
            f.error.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_are_log_spaced_and_end_at_t() {
        let c = log_checkpoints(100_000, 11);
        assert_eq!(c.first(), Some(&1));
        assert_eq!(c.last(), Some(&100_000));
        assert!(c.contains(&10) && c.contains(&1000));
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_checkpoints(5, 100), vec![1, 2, 3, 4, 5]);
        assert_eq!(log_checkpoints(50, 1), vec![50]);
    }

    #[test]
    fn failures_file_sits_next_to_output() {
        assert_eq!(failures_path(Path::new("/a/b/out.csv")), PathBuf::from("/a/b/out.failures.csv"));
    }
}
