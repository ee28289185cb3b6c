//! `tripprice`: assignment, pricing design, evaluation and comparison of
//! multimodal pricing schemes.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tripprice::equilibrium::{Damping, SolverConfig};
use tripprice::pricing::{Priceable, SchemeKind};

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "TRIPPRICE_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "tripprice", version, about = "Trip-based road pricing on multimodal networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Random seed of the optimizer.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Equilibrium convergence tolerance on the relative link-flow residual.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Equilibrium iteration cap.
    #[arg(long, global = true, default_value_t = 5000)]
    pub max_iter: usize,
    /// Step rule: `sra`, `sra:<increase>:<decrease>`, `msa` or `fixed:<step>`.
    #[arg(long, global = true, default_value = "sra")]
    pub damping: Damping,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

impl Global {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
        }
    }
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct ScenarioRef {
    /// Built-in scenario: two-link, nd-car-only or nd-multimodal.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the equilibrium and write the per-path table.
    Assign {
        #[command(flatten)]
        scenario: ScenarioRef,
        /// Path prices: CSV with `path,price` rows or a run record.
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Optimize a pricing scheme.
    Design(DesignArgs),
    /// Re-evaluate a run record, or a scenario under given prices.
    Evaluate {
        /// Run record to reproduce.
        #[arg(long, conflicts_with_all = ["builtin", "scenario"])]
        record: Option<PathBuf>,
        /// Built-in scenario: two-link, nd-car-only or nd-multimodal.
        #[arg(long)]
        builtin: Option<String>,
        /// Scenario TOML file.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Prices file (CSV `path,price` or a run record); unlisted paths are free.
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Tabulate run records against a reference record.
    Compare {
        /// Run records; the first is the reference unless `--reference` is given.
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Index of the reference record.
        #[arg(long, default_value_t = 0)]
        reference: usize,
    },
    /// Scale OD demand until car flows hit their targets.
    Calibrate {
        #[command(flatten)]
        scenario: ScenarioRef,
        /// Car passenger flow target per OD (one value applies to all ODs).
        #[arg(long, value_delimiter = ',', default_value = "2000")]
        targets: Vec<f64>,
    },
    /// Two-path equilibrium, optimum and toll analysis.
    Classical {
        /// Instance JSON (`{"paths": [{"a":..,"b":..,"p":..}, ..], "demand": ..}`);
        /// defaults to the linear desk instance.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Revenue target for the alternative valid toll pair, euro/h.
        #[arg(long, default_value_t = 0.0)]
        revenue: f64,
        /// Logit dispersion for the stochastic comparison.
        #[arg(long)]
        theta: Option<f64>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct DesignArgs {
    #[command(flatten)]
    pub scenario: ScenarioRef,
    /// Pricing scheme: trip or road.
    #[arg(long, default_value = "trip")]
    pub scheme: SchemeKind,
    /// Objective preset: eff, env, acpt, sequ, wequ or all.
    #[arg(long, default_value = "eff")]
    pub objective: String,
    /// Priceable elements: car-only (second best) or all (first best).
    #[arg(long, default_value = "car-only")]
    pub priceable: Priceable,
    /// Allow incentives and cap net revenue.
    #[arg(long)]
    pub revenue_neutral: bool,
    /// Net revenue cap, euro/h.
    #[arg(long, default_value_t = 1000.0)]
    pub b: f64,
    /// Genetic-algorithm population size.
    #[arg(long, default_value_t = 60)]
    pub pop: usize,
    /// Generations per restart.
    #[arg(long, default_value_t = 250)]
    pub gens: usize,
    /// Independent restarts; the best feasible result wins.
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    /// Simplex polish budget, evaluations.
    #[arg(long, default_value_t = 500)]
    pub polish: usize,
    /// Overall evaluation cap.
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Run record whose prices seed the initial population.
    #[arg(long)]
    pub warm: Option<PathBuf>,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type Outcome = Result<(), Failure>;

pub trait Classify<T> {
    /// Bad input: exit code 2.
    fn input(self) -> Result<T, Failure>;
    /// Numerical failure: exit code 3.
    fn numerical(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 2, error: e.into() })
    }

    fn numerical(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 3, error: e.into() })
    }
}

fn configure_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("{WORKERS_ENV} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
