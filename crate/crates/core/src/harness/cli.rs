use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::config::ExperimentConfig;
use super::run::{run_experiment, run_sweep, write_run_csv, write_sweep_csv};
use crate::analysis::mean_and_stderr;
use crate::error::{Error, Result};
use crate::hard::{
    default_x0_candidates, identity_battery, search_hard_instance, verify_hard_instance, HardInstance, DEFAULT_TOL_EQ,
    DEFAULT_TOL_GAP,
};
use crate::link::LinkSpec;

#[derive(Debug, Parser)]
#[command(
    name = "nonlin",
    version,
    about = "Hard instances and regret experiments for non-linear combinatorial bandits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for an exchangeable hard distribution and write it as JSON.
    FindHard {
        /// Link: mnl, exp, poly:a0,a1,..., or linear:c.
        #[arg(long)]
        g: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        b: f64,
        /// Grid denominator q; support points are multiples of 1/q.
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated x0 candidates (default 0.05, 0.10, ..., 0.95).
        #[arg(long, value_delimiter = ',')]
        x0: Option<Vec<f64>>,
    },
    /// Recheck a hard-instance file against a link.
    Verify {
        #[arg(long)]
        inst: PathBuf,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = DEFAULT_TOL_EQ)]
        tol_eq: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_GAP)]
        tol_gap: f64,
    },
    /// Random battery for the alternating binomial identity.
    IdentityCheck {
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run replications of one algorithm and write the per-round CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every (T, algorithm) cell and write the summary CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Exit status: 0 on success, 1 on invalid input, 2 on runtime failure.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Domain { .. } | Error::Resource { .. } | Error::Json(_) | Error::Csv(_) => 1,
        Error::Io(_) | Error::Numeric(_) => 2,
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::FindHard { g, m, b, grid, out, x0 } => {
            let link = LinkSpec::parse_short(&g)?.build(b)?;
            let cands = x0.unwrap_or_else(default_x0_candidates);
            let search = search_hard_instance(&link, m, b, grid, &cands)?;
            std::fs::write(&out, search.best.to_json()?)?;
            println!("x0 = {}", search.best.x0);
            println!("gamma = {}", search.best.gamma);
            println!("atoms = {}", search.best.support.len());
            Ok(0)
        }
        Command::Verify { inst, g, tol_eq, tol_gap } => {
            let inst = HardInstance::from_json(&std::fs::read_to_string(&inst)?)?;
            let link = LinkSpec::parse_short(&g)?.build(inst.b)?;
            let report = verify_hard_instance(&inst, &link, tol_eq, tol_gap);
            for (ell, r) in report.residuals.iter().enumerate() {
                println!("residual[{}] = {r:e}", ell + 1);
            }
            println!("gamma = {}", report.gamma);
            for f in &report.failures {
                println!("failure: {f}");
            }
            println!("{}", if report.valid { "VALID" } else { "INVALID" });
            Ok(if report.valid { 0 } else { 1 })
        }
        Command::IdentityCheck { trials, seed } => {
            let b = identity_battery(trials, seed);
            println!("trials = {}", b.trials);
            println!("max low-degree residual = {:e}", b.max_low_degree_residual);
            println!(
                "degree-m counterexamples above floor = {}/{} ({:.4})",
                b.counterexample_hits, b.trials, b.counterexample_fraction
            );
            println!("{}", if b.passed { "PASS" } else { "FAIL" });
            Ok(if b.passed { 0 } else { 2 })
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcomes = run_experiment(&cfg)?;
            write_run_csv(&cfg.output, &outcomes)?;
            let finals: Vec<f64> = outcomes.iter().filter_map(|o| o.as_ref().ok()).map(|r| r.final_regret).collect();
            let failed = outcomes.len() - finals.len();
            let (mean, se) = mean_and_stderr(&finals);
            println!("wrote {}", cfg.output.display());
            println!("final regret = {mean} ± {se} over {} runs", finals.len());
            if failed > 0 {
                eprintln!("{failed} replications failed; see the failures file next to the output");
                return Ok(2);
            }
            Ok(0)
        }
        Command::Sweep { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let result = run_sweep(&cfg)?;
            write_sweep_csv(&cfg.output, &result)?;
            println!("wrote {}", cfg.output.display());
            for r in &result.rows {
                println!("{} T={} mean={} se={} reps={}", r.algo, r.t, r.mean_regret, r.stderr, r.reps);
            }
            if !result.failures.is_empty() {
                eprintln!("{} replications failed; see the failures file next to the output", result.failures.len());
                return Ok(2);
            }
            Ok(0)
        }
    }
}
