//! Regret against the best fixed subset in hindsight, divergences between
//! feedback laws, and log-log slope fits.

mod divergence;
mod regret;
mod slope;

pub use divergence::{bernoulli_kl, bernoulli_tv, categorical_kl, tv_distance};
pub use regret::{regret_from_means, regret_of_run, RegretTrace};
pub use slope::{mean_and_stderr, slope_estimate, SlopeFit};
