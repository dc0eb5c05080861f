use rand::RngCore;
use seclend_core::greedy::greedy_by_value;
use seclend_core::privauc::{
    first_admissible_epsilon, run_privauc, run_privauc_diagnostic, satisfied_clients, NoiseMode,
    PrivAucConfig, PrivAucParams,
};
use seclend_core::{Error, Valuation};

use super::{gen, Outcome};
use crate::error::HarnessError;
use crate::report::{ratio, Check};
use crate::runner::{run_trials, trial_rng};
use crate::spec::{Noise, PrivAucWelfareParams};
use crate::stats::Summary;
use crate::table::{format_float, Cell, Row, Table};

pub const TOLERANCE: f64 = 1e-9;

/// Budgets tried when none is given: `2^0, 2^1, ..., 2^40`.
pub fn epsilon_candidates() -> impl Iterator<Item = f64> {
    (0..=40).map(|k| 2f64.powi(k))
}

fn params(p: &PrivAucWelfareParams, epsilon: f64) -> PrivAucParams {
    PrivAucParams {
        alpha: p.alpha,
        max_demand: p.max_demand,
        supply: p.supply,
        epsilon,
        rho: p.rho,
        beta: p.beta,
    }
}

/// The run configuration: the given budget if admissible, otherwise the
/// first admissible power of two.
pub fn admissible_config(p: &PrivAucWelfareParams) -> Result<PrivAucConfig, HarnessError> {
    let config = match p.epsilon {
        Some(eps) => PrivAucConfig::new(params(p, eps), p.clients)?,
        None => first_admissible_epsilon(params(p, 1.0), p.clients, epsilon_candidates())
            .ok_or_else(|| {
                Error::Inadmissible(format!(
                    "no epsilon in 2^0..2^40 is admissible for n = {}, V = {}",
                    p.clients, p.supply
                ))
            })?,
    };
    let noise = match p.noise {
        Noise::Laplace => NoiseMode::Laplace,
        Noise::Disabled => NoiseMode::Disabled,
    };
    Ok(config.with_noise(noise).with_monotone(p.monotone))
}

fn float(r: &Row, c: &str) -> f64 {
    match r.get(c) {
        Some(Cell::Float(x)) => *x,
        Some(Cell::Int(x)) => *x as f64,
        _ => f64::NAN,
    }
}

fn flag(r: &Row, c: &str) -> bool {
    r.get(c) == Some(&Cell::Bool(true))
}

pub fn run(
    p: &PrivAucWelfareParams,
    seed: u64,
    trials: usize,
    diagnostic: bool,
) -> Result<Outcome, HarnessError> {
    let config = admissible_config(p)?;
    let n = p.clients;
    let v = f64::from(p.supply);
    let e = config.error();
    let eps = config.params().epsilon;
    let cap = config.bid_cap();

    // Valuations, then the counter's noise seed, from the trial's stream.
    let instance = |k: usize| -> (Vec<Valuation>, u64) {
        let mut rng = trial_rng(seed, k);
        let vals = (0..n).map(|_| gen::dmr(&mut rng, p.max_demand)).collect();
        (vals, rng.next_u64())
    };

    let rows = run_trials(seed, trials, |k, s| -> Result<Row, HarnessError> {
        let (vals, noise_seed) = instance(k);
        let out = run_privauc(&vals, &config, noise_seed)?;
        let shares = out.allocation.shares();
        let total = out.allocation.total() as f64;
        let welfare: f64 = vals.iter().zip(shares).map(|(v, &s)| v.value(s)).sum();
        let opt_alloc = greedy_by_value(&vals, p.supply);
        let opt: f64 = vals
            .iter()
            .zip(opt_alloc.shares())
            .map(|(v, &s)| v.value(s))
            .sum();
        let nf = n as f64;
        let unsatisfied = n - satisfied_clients(&vals, &out.allocation, out.final_price).len();
        let min_held = out
            .held
            .iter()
            .map(|a| a.price)
            .fold(f64::INFINITY, f64::min);
        let max_bids = out.bids_per_client.iter().copied().max().unwrap_or(0);
        let mut row = Row::new()
            .set("experiment", "privauc-welfare")
            .set("trial", k)
            .set("seed", s)
            .set("clients", n)
            .set("supply", p.supply)
            .set("max_demand", p.max_demand)
            .set("alpha", p.alpha)
            .set("epsilon", eps)
            .set("rho", p.rho)
            .set("beta", p.beta)
            .set("rounds", out.rounds)
            .set("stopped_early", out.stopped_early)
            .set("total_allocated", total)
            .set("feasible", total <= v)
            .set("max_error", out.counter_max_error)
            .set("error_bound", e)
            .set("within_bound", out.counter_max_error <= e)
            .set("cleared", total >= v - 4.0 * e)
            .set("welfare", welfare)
            .set("opt_welfare", opt)
            .set("welfare_per_share", welfare / v)
            .set("threshold_per_share", (1.0 - p.rho) * opt / v - p.rho)
            .set("welfare_per_client", welfare / nf)
            .set("threshold_per_client", (1.0 - p.rho) * opt / nf - p.rho)
            .set("final_price", out.final_price)
            .set("unsatisfied", unsatisfied)
            .set("total_bids", out.total_bids)
            .set("max_client_bids", max_bids);
        if min_held.is_finite() {
            row = row.set("min_held_price", min_held);
        }
        if let Some(cap) = cap {
            row = row.set("bid_cap", cap);
        }
        Ok(row)
    })?;

    let accurate: Vec<&Row> = rows.iter().filter(|r| flag(r, "within_bound")).collect();
    let feasible = rows.iter().filter(|r| flag(r, "feasible")).count();
    let cleared = accurate.iter().filter(|r| flag(r, "cleared")).count();
    let per_share: Vec<f64> = rows
        .iter()
        .map(|r| float(r, "welfare_per_share") - float(r, "threshold_per_share"))
        .collect();
    let per_share = Summary::of(&per_share);
    let mean_of = |c: &str| Summary::of(&rows.iter().map(|r| float(r, c)).collect::<Vec<_>>()).mean;
    let per_client: Vec<f64> = rows
        .iter()
        .map(|r| float(r, "welfare_per_client") - float(r, "threshold_per_client"))
        .collect();
    let per_client = Summary::of(&per_client);
    let unsatisfied_ok = accurate
        .iter()
        .filter(|r| float(r, "unsatisfied") <= p.rho * n as f64 + TOLERANCE)
        .count();
    // A held share was bought at most two increments below the final price.
    let stale_ok = rows
        .iter()
        .filter(|r| match r.get("min_held_price") {
            Some(Cell::Float(m)) => *m >= float(r, "final_price") - 2.0 * p.alpha - TOLERANCE,
            _ => true,
        })
        .count();
    let capped = rows
        .iter()
        .filter(|r| cap.is_none_or(|c| float(r, "max_client_bids") <= c as f64))
        .count();

    let checks = vec![
        Check::info(
            "configuration",
            format!(
                "epsilon {}, E {}, V' {}, rounds {}, bid cap {}",
                format_float(eps),
                format_float(e),
                format_float(config.effective_supply()),
                config.rounds(),
                cap.map_or_else(|| "none".to_owned(), |c| c.to_string())
            ),
        ),
        Check::gate(
            "allocation is feasible",
            feasible == trials,
            ratio(feasible, trials),
            ratio(trials, trials),
        ),
        Check::gate(
            "market clears to V - 4E when the counter is accurate",
            cleared == accurate.len(),
            ratio(cleared, accurate.len()),
            ratio(accurate.len(), accurate.len()),
        ),
        Check::gate(
            "welfare per share above (1 - rho) OPT - rho",
            trials > 1 && per_share.lower95() >= 0.0,
            format!(
                "mean {} vs threshold {}, margin {} with 95% lower bound {}",
                format_float(mean_of("welfare_per_share")),
                format_float(mean_of("threshold_per_share")),
                format_float(per_share.mean),
                format_float(per_share.lower95())
            ),
            "95% lower bound on margin >= 0".to_owned(),
        ),
        Check::info(
            "welfare per client above (1 - rho) OPT - rho",
            format!(
                "mean {} vs threshold {}, margin {} with 95% lower bound {}",
                format_float(mean_of("welfare_per_client")),
                format_float(mean_of("threshold_per_client")),
                format_float(per_client.mean),
                format_float(per_client.lower95())
            ),
        ),
        Check::gate(
            "at most rho n unsatisfied clients when the counter is accurate",
            unsatisfied_ok == accurate.len(),
            ratio(unsatisfied_ok, accurate.len()),
            ratio(accurate.len(), accurate.len()),
        ),
        Check::gate(
            "held shares bought within 2 alpha of the final price",
            stale_ok == trials,
            ratio(stale_ok, trials),
            ratio(trials, trials),
        ),
        Check::gate(
            "bids per client within the cap",
            capped == trials,
            ratio(capped, trials),
            ratio(trials, trials),
        ),
    ];

    let mut traces = Vec::new();
    if diagnostic && trials > 0 {
        let (vals, noise_seed) = instance(0);
        let out = run_privauc_diagnostic(&vals, &config, noise_seed)?;
        let rows = out
            .transcript
            .iter()
            .map(|r| {
                Row::new()
                    .set("trial", 0usize)
                    .set("t", r.t)
                    .set("client", r.client)
                    .set("bit", r.bit)
                    .set("noisy_count", r.noisy_count)
                    .set("price", r.price)
            })
            .collect();
        traces.push(("transcript", Table::new(rows)));
    }
    Ok((Table::new(rows), checks, traces))
}
