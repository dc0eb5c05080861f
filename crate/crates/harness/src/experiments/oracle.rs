use rand::Rng;
use seclend_core::greedy::{brute_force_optimal, greedy_allocate};
use seclend_core::model::lender_welfare;
use seclend_core::Pmf;

use super::{gen, Outcome};
use crate::error::HarnessError;
use crate::report::{ratio, Check};
use crate::runner::{run_trials, trial_rng};
use crate::spec::OracleParams;
use crate::table::{format_float, Cell, Row, Table};

pub const TOLERANCE: f64 = 1e-9;

pub fn run(p: &OracleParams, seed: u64, trials: usize) -> Result<Outcome, HarnessError> {
    let rows = run_trials(seed, trials, |k, s| -> Result<Row, HarnessError> {
        let mut rng = trial_rng(seed, k);
        let n = rng.gen_range(1..=p.max_clients);
        let supply = rng.gen_range(0..=p.max_supply);
        let max_demand = rng.gen_range(1..=p.max_demand);
        let posteriors: Vec<Pmf> = (0..n).map(|_| gen::pmf(&mut rng, max_demand)).collect();

        let greedy = lender_welfare(&greedy_allocate(&posteriors, supply), &posteriors)?;
        let (_, oracle) = brute_force_optimal(&posteriors, supply)?;
        let diff = (greedy - oracle).abs();
        Ok(Row::new()
            .set("experiment", "oracle-equivalence")
            .set("trial", k)
            .set("seed", s)
            .set("clients", n)
            .set("supply", supply)
            .set("max_demand", max_demand)
            .set("greedy_welfare", greedy)
            .set("oracle_welfare", oracle)
            .set("abs_diff", diff)
            .set("matched", diff <= TOLERANCE))
    })?;

    let matched = rows
        .iter()
        .filter(|r| r.get("matched") == Some(&Cell::Bool(true)))
        .count();
    let worst = rows
        .iter()
        .filter_map(|r| match r.get("abs_diff") {
            Some(Cell::Float(d)) => Some(*d),
            _ => None,
        })
        .fold(0.0, f64::max);
    let checks = vec![Check::gate(
        "greedy matches exhaustive optimum",
        matched == trials,
        format!(
            "{} exact matches, worst gap {}",
            ratio(matched, trials),
            format_float(worst)
        ),
        format!(
            "{} within {}",
            ratio(trials, trials),
            format_float(TOLERANCE)
        ),
    )];
    Ok((Table::new(rows), checks, Vec::new()))
}
