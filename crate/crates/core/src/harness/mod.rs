//! Experiment configuration, seeded replicated runs, CSV output and the CLI.

mod cli;
mod config;
mod run;

pub use cli::{run_cli, Cli, Command};
pub use config::{
    AdversaryConfig, AlgorithmConfig, DeltaConfig, ExperimentConfig, InstanceSource, RegretBasis, ScheduleSource,
};
pub use run::{
    log_checkpoints, run_experiment, run_sweep, simulate, thread_pool, write_run_csv, write_sweep_csv, Prepared,
    RunFailure, RunOutcome, RunResult, Simulation, SweepResult, SweepRow, TraceRow,
};
