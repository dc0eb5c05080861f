use rand::{Rng, RngCore};
use seclend_core::dpcount::{usefulness_bound, PrivateCounter};

use super::Outcome;
use crate::error::HarnessError;
use crate::report::{ratio, Check};
use crate::runner::{run_trials, trial_rng};
use crate::spec::CounterParams;
use crate::table::{format_float, Cell, Row, Table};

/// Required share of trials whose worst error stays within the bound.
pub const MIN_PASS_FRACTION: f64 = 0.95;

fn stream(p: &CounterParams, seed: u64, trial: usize) -> Result<PrivateCounter, HarnessError> {
    let mut rng = trial_rng(seed, trial);
    let noise_seed = rng.next_u64();
    let mut counter =
        PrivateCounter::new(p.horizon, p.epsilon, noise_seed)?.with_monotone(p.monotone);
    for _ in 0..p.horizon {
        counter.feed(rng.gen_bool(p.density))?;
    }
    Ok(counter)
}

pub fn run(
    p: &CounterParams,
    seed: u64,
    trials: usize,
    diagnostic: bool,
) -> Result<Outcome, HarnessError> {
    if !(0.0..=1.0).contains(&p.density) {
        return Err(HarnessError::Spec(format!(
            "density must lie in [0, 1], got {}",
            p.density
        )));
    }
    let bound = usefulness_bound(p.horizon, p.epsilon, p.beta)?;
    let rows = run_trials(seed, trials, |k, s| -> Result<Row, HarnessError> {
        let counter = stream(p, seed, k)?;
        let err = counter.max_error();
        Ok(Row::new()
            .set("experiment", "counter-usefulness")
            .set("trial", k)
            .set("seed", s)
            .set("horizon", p.horizon)
            .set("epsilon", p.epsilon)
            .set("beta", p.beta)
            .set("max_error", err)
            .set("error_bound", bound)
            .set("within_bound", err <= bound))
    })?;

    let within = rows
        .iter()
        .filter(|r| r.get("within_bound") == Some(&Cell::Bool(true)))
        .count();
    let fraction = within as f64 / trials.max(1) as f64;
    let checks = vec![
        Check::info("error bound E", format_float(bound)),
        Check::gate(
            "counter error within E",
            trials > 0 && fraction >= MIN_PASS_FRACTION,
            format!("{} = {}", ratio(within, trials), format_float(fraction)),
            format!(">= {}", format_float(MIN_PASS_FRACTION)),
        ),
    ];

    let mut traces = Vec::new();
    if diagnostic && trials > 0 {
        let counter = stream(p, seed, 0)?;
        let rows = counter
            .trace()
            .into_iter()
            .map(|r| {
                Row::new()
                    .set("trial", 0usize)
                    .set("t", r.t)
                    .set("true_count", r.true_sum)
                    .set("noisy_count", r.noisy_sum)
            })
            .collect();
        traces.push(("trace", Table::new(rows)));
    }
    Ok((Table::new(rows), checks, traces))
}
