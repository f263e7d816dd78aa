use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algo::Exp2Params;
use crate::error::{Error, Result};
use crate::link::LinkSpec;
use crate::reward::{ProblemDims, DEFAULT_TENSOR_CAP};
use crate::subset::{binomial, DEFAULT_SUBSET_CAP};

/// A full experiment: dimensions, link, adversary, learners, replication plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: ProblemDims,
    pub link: LinkSpec,
    pub adversary: AdversaryConfig,
    /// `run` takes exactly one; `sweep` takes any number.
    pub algorithms: Vec<AlgorithmConfig>,
    pub replications: usize,
    pub base_seed: u64,
    /// Horizons for `sweep`; `run` uses `dims.t`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_grid: Vec<usize>,
    pub output: PathBuf,
    /// Write every round instead of log-spaced checkpoints.
    #[serde(default)]
    pub full_trace: bool,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default)]
    pub regret_basis: RegretBasis,
}

fn default_checkpoints() -> usize {
    100
}

/// Which expected rewards regret is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretBasis {
    /// The adversary's closed-form mean under the round-`t` law of `v_t`.
    #[default]
    Expected,
    /// `R(S, v_t)` at the realized hidden vectors.
    Realized,
}

/// Where a hard instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    /// A JSON file written by `find-hard`.
    File(PathBuf),
    /// Solve for one at load time with `b = K` and `m` set by the adversary.
    Search {
        grid: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0_candidates: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConfig {
    /// From the δ schedule with the instance's KL coefficient.
    Auto,
    Fixed(f64),
}

/// Utility rows, inline or from a `t,v_0,...` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSource {
    File(PathBuf),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryConfig {
    HardNonPoly {
        instance: InstanceSource,
        /// Defaults to `{0, ..., K-1}`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        special: Option<Vec<usize>>,
        delta: DeltaConfig,
    },
    /// Needs `dims.d`; the instance has `m = d` and `b = K`.
    HardPoly {
        instance: InstanceSource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        special: Option<Vec<usize>>,
        delta: DeltaConfig,
    },
    MnlHard {
        instance: InstanceSource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        special: Option<Vec<usize>>,
        delta: DeltaConfig,
    },
    MnlGeneral {
        prices: Vec<f64>,
        schedule: ScheduleSource,
    },
    Oblivious {
        schedule: ScheduleSource,
    },
    Stochastic {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Exp3 {
        #[serde(default)]
        mixing: f64,
    },
    TsallisInf,
    /// Tensor order is `dims.d`, or the link's degree when unset.
    Exp2 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma_mix: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        design_eps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        design_iters: Option<usize>,
    },
    Constant {
        subset: Vec<usize>,
    },
}

impl AlgorithmConfig {
    pub fn exp2_params(&self) -> Option<Exp2Params> {
        match *self {
            AlgorithmConfig::Exp2 { gamma_mix, eta, design_eps, design_iters } => {
                let std = Exp2Params::standard();
                Some(Exp2Params {
                    gamma_mix,
                    eta,
                    design_eps: design_eps.unwrap_or(std.design_eps),
                    design_iters: design_iters.unwrap_or(std.design_iters),
                })
            }
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmConfig::Exp3 { .. } => "exp3",
            AlgorithmConfig::TsallisInf => "tsallis_inf",
            AlgorithmConfig::Exp2 { .. } => "exp2",
            AlgorithmConfig::Constant { .. } => "constant",
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config; relative paths inside it are resolved
    /// against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.output);
        match &mut self.adversary {
            AdversaryConfig::HardNonPoly { instance: InstanceSource::File(p), .. }
            | AdversaryConfig::HardPoly { instance: InstanceSource::File(p), .. }
            | AdversaryConfig::MnlHard { instance: InstanceSource::File(p), .. }
            | AdversaryConfig::MnlGeneral { schedule: ScheduleSource::File(p), .. }
            | AdversaryConfig::Oblivious { schedule: ScheduleSource::File(p) } => fix(p),
            _ => {}
        }
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// All horizons this config can be run at.
    pub fn horizons(&self) -> Vec<usize> {
        if self.t_grid.is_empty() {
            vec![self.dims.t]
        } else {
            self.t_grid.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let ProblemDims { n, k, .. } = self.dims;
        if binomial(n, k) > DEFAULT_SUBSET_CAP as u128 {
            return Err(Error::Resource {
                what: "subset enumeration",
                size: binomial(n, k),
                cap: DEFAULT_SUBSET_CAP as u128,
            });
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        if self.t_grid.contains(&0) {
            return Err(Error::invalid("T grid entries must be positive"));
        }
        if self.checkpoints == 0 {
            return Err(Error::invalid("checkpoints must be at least 1"));
        }
        let link = self.link.build(k as f64)?;
        match &self.adversary {
            AdversaryConfig::HardNonPoly { special, delta, instance }
            | AdversaryConfig::MnlHard { special, delta, instance } => {
                check_special(special.as_deref(), n, k)?;
                check_delta(delta)?;
                check_instance(instance)?;
            }
            AdversaryConfig::HardPoly { special, delta, instance } => {
                let d = self.dims.d.ok_or_else(|| Error::invalid("hard_poly needs dims.d"))?;
                if d >= k {
                    return Err(Error::invalid(format!("hard_poly needs d < K, got d={d}, K={k}")));
                }
                check_special(special.as_deref(), n, d)?;
                check_delta(delta)?;
                check_instance(instance)?;
            }
            AdversaryConfig::MnlGeneral { prices, schedule } => {
                if prices.len() != n || prices.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::invalid(format!("need {n} prices in [0, 1]")));
                }
                check_rows(schedule, n)?;
            }
            AdversaryConfig::Oblivious { schedule } => check_rows(schedule, n)?,
            AdversaryConfig::Stochastic { values } => {
                if values.len() != n || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::invalid(format!("need {n} values in [0, 1]")));
                }
            }
        }
        if matches!(self.adversary, AdversaryConfig::MnlHard { .. } | AdversaryConfig::MnlGeneral { .. })
            && self.link != LinkSpec::Mnl
        {
            return Err(Error::invalid("MNL adversaries need the mnl link"));
        }
        for algo in &self.algorithms {
            match algo {
                AlgorithmConfig::Exp3 { mixing } if !(0.0..=1.0).contains(mixing) => {
                    return Err(Error::invalid(format!("EXP3 mixing must lie in [0, 1], got {mixing}")));
                }
                AlgorithmConfig::Exp2 { .. } => {
                    let d = self.exp2_order(&link)?;
                    crate::algo::Exp2::check_link(&link, d)?;
                    let size = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
                    if size > DEFAULT_TENSOR_CAP as u128 {
                        return Err(Error::Resource { what: "tensor features", size, cap: DEFAULT_TENSOR_CAP as u128 });
                    }
                }
                AlgorithmConfig::Constant { subset } => check_special(Some(subset), n, k)?,
                _ => {}
            }
        }
        Ok(())
    }

    /// Tensor order for EXP2.
    pub fn exp2_order(&self, link: &crate::link::Link) -> Result<usize> {
        match (self.dims.d, link.degree()) {
            (Some(d), _) => Ok(d),
            (None, Some(deg)) => Ok(deg.min(self.dims.k)),
            (None, None) => Err(Error::invalid("EXP2 needs dims.d or a polynomial link")),
        }
    }
}

fn check_special(special: Option<&[usize]>, n: usize, size: usize) -> Result<()> {
    if let Some(s) = special {
        let mut sorted = s.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != size || sorted.iter().any(|&i| i >= n) {
            return Err(Error::invalid(format!("subset {s:?} must have {size} distinct indices below {n}")));
        }
    }
    Ok(())
}

fn check_delta(delta: &DeltaConfig) -> Result<()> {
    if let DeltaConfig::Fixed(d) = delta {
        if !(*d > 0.0 && *d <= 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1], got {d}")));
        }
    }
    Ok(())
}

fn check_instance(src: &InstanceSource) -> Result<()> {
    if let InstanceSource::Search { grid, .. } = src {
        if *grid == 0 || *grid > crate::hard::MAX_GRID_DENOMINATOR {
            return Err(Error::invalid(format!(
                "grid must lie in 1..={}, got {grid}",
                crate::hard::MAX_GRID_DENOMINATOR
            )));
        }
    }
    Ok(())
}

fn check_rows(src: &ScheduleSource, n: usize) -> Result<()> {
    if let ScheduleSource::Rows(rows) = src {
        if rows.is_empty() || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!("inline schedule rows must be non-empty with {n} entries")));
        }
    }
    Ok(())
}
