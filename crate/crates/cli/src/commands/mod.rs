pub mod capacity;
pub mod error_dist;
pub mod optimize;
pub mod power;
pub mod reuse;
pub mod simulate;
pub mod stoploss;
pub mod subsample;

use reuse_risk::report::Report;
use reuse_risk::Result;

use crate::params::{kebab, Fields};

#[derive(Debug, Clone, clap::Subcommand)]
pub enum Command {
    /// Error-count distributions of two dependent studies
    ErrorDist(error_dist::Args),
    /// Stop-loss premium curves and their ordering
    Stoploss(stoploss::Args),
    /// Subsampling capacity bounds
    Capacity(capacity::Args),
    /// Power, Type II error and sample size
    Power(power::Args),
    /// Seeded subsample allocation and overlap audit
    Subsample(subsample::Args),
    /// Monte Carlo reuse designs
    Simulate(simulate::Args),
    /// Portfolio grid search
    Optimize(optimize::Args),
    /// Reuse count of a single unit
    Reuse(reuse::Args),
}

/// Command names with their parameter keys, in kebab case.
pub fn schema() -> Vec<(&'static str, Vec<String>)> {
    let keys = |k: &[&str]| k.iter().map(|s| kebab(s)).collect::<Vec<_>>();
    vec![
        ("error-dist", keys(error_dist::Args::KEYS)),
        ("stoploss", keys(stoploss::Args::KEYS)),
        ("capacity", keys(capacity::Args::KEYS)),
        ("power", keys(power::Args::KEYS)),
        ("subsample", keys(subsample::Args::KEYS)),
        ("simulate", keys(simulate::Args::KEYS)),
        ("optimize", keys(optimize::Args::KEYS)),
        ("reuse", keys(reuse::Args::KEYS)),
    ]
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ErrorDist(_) => "error-dist",
            Command::Stoploss(_) => "stoploss",
            Command::Capacity(_) => "capacity",
            Command::Power(_) => "power",
            Command::Subsample(_) => "subsample",
            Command::Simulate(_) => "simulate",
            Command::Optimize(_) => "optimize",
            Command::Reuse(_) => "reuse",
        }
    }

    /// Flags given on the command line, keyed in kebab case.
    pub fn given(&self) -> Vec<(String, String)> {
        let pairs = match self {
            Command::ErrorDist(a) => a.given(),
            Command::Stoploss(a) => a.given(),
            Command::Capacity(a) => a.given(),
            Command::Power(a) => a.given(),
            Command::Subsample(a) => a.given(),
            Command::Simulate(a) => a.given(),
            Command::Optimize(a) => a.given(),
            Command::Reuse(a) => a.given(),
        };
        pairs.into_iter().map(|(k, v)| (kebab(k), v)).collect()
    }
}

/// A typed, validated command.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    ErrorDist(error_dist::Config),
    Stoploss(stoploss::Config),
    Capacity(capacity::Config),
    Power(power::Config),
    Subsample(subsample::Config),
    Simulate(simulate::Config),
    Optimize(optimize::Config),
    Reuse(reuse::Config),
}

impl Job {
    pub fn build(command: &str, f: &mut Fields) -> Job {
        match command {
            "error-dist" => Job::ErrorDist(error_dist::build(f)),
            "stoploss" => Job::Stoploss(stoploss::build(f)),
            "capacity" => Job::Capacity(capacity::build(f)),
            "power" => Job::Power(power::build(f)),
            "subsample" => Job::Subsample(subsample::build(f)),
            "simulate" => Job::Simulate(simulate::build(f)),
            "optimize" => Job::Optimize(optimize::build(f)),
            "reuse" => Job::Reuse(reuse::build(f)),
            other => unreachable!("clap only yields known commands, got {other}"),
        }
    }

    pub fn execute(&self, seed: u64) -> Result<Report> {
        match self {
            Job::ErrorDist(c) => error_dist::execute(c),
            Job::Stoploss(c) => stoploss::execute(c),
            Job::Capacity(c) => capacity::execute(c),
            Job::Power(c) => power::execute(c),
            Job::Subsample(c) => subsample::execute(c, seed),
            Job::Simulate(c) => simulate::execute(c, seed),
            Job::Optimize(c) => optimize::execute(c, seed),
            Job::Reuse(c) => reuse::execute(c),
        }
    }
}
