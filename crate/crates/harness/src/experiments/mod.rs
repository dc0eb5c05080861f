//! One module per experiment kind. Each returns the per-trial table and the
//! checks evaluated over it.

mod auction;
mod counter;
mod example1;
mod gen;
mod multiround;
mod oracle;
mod privauc;
mod tails;
mod truthfulness;

use crate::error::HarnessError;
use crate::report::Report;
use crate::spec::{Experiment, ExperimentSpec};

pub use multiround::admissible_round_epsilon;
pub use privauc::admissible_config;

pub fn run(spec: &ExperimentSpec, diagnostic: bool) -> Result<Report, HarnessError> {
    let seed = spec.seed;
    let trials = spec.trials();
    let (table, checks, traces) = match &spec.experiment {
        Experiment::OracleEquivalence(p) => oracle::run(p, seed, trials)?,
        Experiment::TailIdentity(p) => tails::run(p, seed, trials)?,
        Experiment::Truthfulness(p) => truthfulness::run(p, seed, trials)?,
        Experiment::AuctionWelfare(p) => auction::run(p, seed, trials)?,
        Experiment::CounterUsefulness(p) => counter::run(p, seed, trials, diagnostic)?,
        Experiment::PrivaucWelfare(p) => privauc::run(p, seed, trials, diagnostic)?,
        Experiment::Example1(p) => example1::run(p, seed, trials)?,
        Experiment::Multiround(p) => multiround::run(p, seed, trials)?,
    };
    Ok(Report {
        kind: spec.experiment.kind(),
        seed,
        trials,
        table,
        checks,
        traces,
    })
}

type Outcome = (
    crate::table::Table,
    Vec<crate::report::Check>,
    Vec<(&'static str, crate::table::Table)>,
);
