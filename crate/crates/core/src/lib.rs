//! Simulation and analysis toolkit for adversarial combinatorial bandits
//! whose reward is a known non-linear link `g` of the summed values of the
//! chosen arms.
//!
//! - [`subset`], [`link`], [`reward`]: subsets and their ranks, link
//!   functions, expected rewards, the exhaustive benchmark, tensor lifts.
//! - [`hard`]: LP search and verification of exchangeable hard distributions.
//! - [`env`]: hard adversaries, MNL assortment feedback, oblivious schedules.
//! - [`algo`]: EXP3 and Tsallis-INF over subset-arms, EXP2 over tensor features.
//! - [`analysis`]: regret traces, divergences, log-log slopes.
//! - [`harness`]: experiment configuration, seeded runs, CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algo;
pub mod analysis;
pub mod env;
pub mod error;
pub mod hard;
pub mod harness;
pub mod link;
pub mod reward;
pub mod subset;

pub use error::{Error, Result};
pub use link::{Link, LinkKind, LinkSpec, Polynomial};
pub use reward::{ProblemDims, RewardVector};
pub use subset::SubsetAction;
