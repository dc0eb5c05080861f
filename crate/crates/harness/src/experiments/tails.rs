use rand::Rng;
use seclend_core::model::{expected_usage, tail_probabilities};

use super::{gen, Outcome};
use crate::error::HarnessError;
use crate::report::{ratio, Check};
use crate::runner::{run_trials, trial_rng};
use crate::spec::TailParams;
use crate::table::{format_float, Cell, Row, Table};

pub const TOLERANCE: f64 = 1e-9;

pub fn run(p: &TailParams, seed: u64, trials: usize) -> Result<Outcome, HarnessError> {
    let rows = run_trials(seed, trials, |k, s| -> Result<Row, HarnessError> {
        let mut rng = trial_rng(seed, k);
        let max_demand = rng.gen_range(1..=p.max_demand);
        let pmf = gen::pmf(&mut rng, max_demand);
        let shares = rng.gen_range(0..=max_demand);
        let direct = expected_usage(&pmf, shares)?;
        let tail_sum = tail_probabilities(&pmf).value(shares);
        let diff = (direct - tail_sum).abs();
        Ok(Row::new()
            .set("experiment", "tail-identity")
            .set("trial", k)
            .set("seed", s)
            .set("max_demand", max_demand)
            .set("shares", shares)
            .set("direct", direct)
            .set("tail_sum", tail_sum)
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
        "expected usage equals tail sum",
        matched == trials,
        format!(
            "{} pairs agree, worst gap {}",
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
