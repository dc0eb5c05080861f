//! Two clients who each always use one share, one share to lend per round,
//! greedy with uniform tie-breaking. Client 0 withdraws for good once it
//! wins round 1. Client 1 either reports truthfully or sits out round 1 so
//! that client 0 wins it and withdraws.

use seclend_core::greedy::TieBreak;
use seclend_core::mechanism::{
    run_mechanism, AllocationRule, ClientStrategy, ConditionalWithdrawal, FirstRoundZero, Truthful,
};
use seclend_core::Pmf;

use super::Outcome;
use crate::error::HarnessError;
use crate::report::{ratio, Check};
use crate::runner::run_trials;
use crate::spec::Example1Params;
use crate::stats::Summary;
use crate::table::{format_float, Cell, Row, Table};

/// The truthful mean must land within this fraction of the horizon around
/// half of it: `[47, 53]` over 100 rounds.
pub const WINDOW: f64 = 0.03;

fn second_client_utility(deviate: bool, rounds: usize, seed: u64) -> Result<u64, HarnessError> {
    let priors = vec![Pmf::point_mass(1, 1)?; 2];
    let second: Box<dyn ClientStrategy> = if deviate {
        Box::new(FirstRoundZero)
    } else {
        Box::new(Truthful)
    };
    let mut strategies: Vec<Box<dyn ClientStrategy>> =
        vec![Box::new(ConditionalWithdrawal), second];
    let rule = AllocationRule::Greedy {
        ties: TieBreak::Uniform,
    };
    let out = run_mechanism(&mut strategies, &priors, 1, rounds, &rule, seed)?;
    Ok(out.client_utilities[1])
}

/// Expected truthful utility of the second client: a fair coin decides round 1; if
/// client 0 wins it withdraws and client 1 takes every later round, otherwise
/// the two keep splitting ties.
pub fn truthful_expectation(rounds: usize) -> f64 {
    if rounds == 0 {
        return 0.0;
    }
    let rest = (rounds - 1) as f64;
    0.5 * rest + 0.5 * (1.0 + rest / 2.0)
}

pub fn run(p: &Example1Params, seed: u64, trials: usize) -> Result<Outcome, HarnessError> {
    if p.rounds == 0 {
        return Err(HarnessError::Spec("rounds must be positive".into()));
    }
    let rows = run_trials(seed, trials, |k, s| -> Result<Row, HarnessError> {
        let truthful = second_client_utility(false, p.rounds, s)?;
        let deviant = second_client_utility(true, p.rounds, s)?;
        Ok(Row::new()
            .set("experiment", "example1")
            .set("trial", k)
            .set("seed", s)
            .set("clients", 2usize)
            .set("supply", 1u32)
            .set("rounds", p.rounds)
            .set("utility_truthful", truthful)
            .set("utility_deviant", deviant)
            .set("advantage", deviant as i64 - truthful as i64))
    })?;

    let column = |c: &str| -> Vec<f64> {
        rows.iter()
            .map(|r| match r.get(c) {
                Some(Cell::Int(v)) => *v as f64,
                _ => f64::NAN,
            })
            .collect()
    };
    let target = (p.rounds - 1) as f64;
    let deviant = column("utility_deviant");
    let exact = deviant.iter().filter(|&&u| u == target).count();
    let truthful = Summary::of(&column("utility_truthful"));
    let r = p.rounds as f64;
    let (lo, hi) = (r * (0.5 - WINDOW), r * (0.5 + WINDOW));
    let checks = vec![
        Check::gate(
            "deviant second client utility",
            trials > 0 && exact == trials,
            format!(
                "{} trials at {}",
                ratio(exact, trials),
                format_float(target)
            ),
            format!("{} in every trial", format_float(target)),
        ),
        Check::gate(
            "truthful second client mean utility",
            trials > 0 && truthful.mean >= lo && truthful.mean <= hi,
            format!(
                "{} (se {})",
                format_float(truthful.mean),
                format_float(truthful.se())
            ),
            format!("in [{}, {}]", format_float(lo), format_float(hi)),
        ),
        Check::info(
            "exact truthful expectation",
            format_float(truthful_expectation(p.rounds)),
        ),
    ];
    Ok((Table::new(rows), checks, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_at_one_hundred_rounds() {
        assert_eq!(truthful_expectation(100), 74.75);
        assert_eq!(truthful_expectation(1), 0.5);
    }
}
