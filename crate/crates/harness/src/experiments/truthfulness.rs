use rand::Rng;
use seclend_core::greedy::greedy_allocate;
use seclend_core::model::bayes_posterior;
use seclend_core::{ConditionalDistribution, Pmf};

use super::{gen, Outcome};
use crate::error::HarnessError;
use crate::report::Check;
use crate::runner::{run_trials, trial_rng};
use crate::spec::TruthfulnessParams;
use crate::table::{format_float, Cell, Row, Table};

pub const TOLERANCE: f64 = 1e-9;

/// Every map `0..=U -> 0..=U`, as the list of images.
fn all_maps(max_demand: u32) -> Vec<Vec<u32>> {
    let k = max_demand as usize + 1;
    let mut maps = vec![Vec::new()];
    for _ in 0..k {
        maps = maps
            .into_iter()
            .flat_map(|m| {
                (0..k as u32).map(move |r| {
                    let mut next = m.clone();
                    next.push(r);
                    next
                })
            })
            .collect();
    }
    maps
}

struct Tally {
    comparisons: u64,
    violations: u64,
    worst_gap: f64,
}

/// Fixes everyone else's posterior and compares, for each realized demand
/// `u` of `client`, the shares it uses when reporting truthfully (its
/// posterior collapses to `u`) against every deterministic misreport map.
fn check_client(
    posteriors: &[Pmf],
    prior: &Pmf,
    client: usize,
    supply: u32,
    maps: &[Vec<u32>],
) -> Result<Tally, HarnessError> {
    let max_demand = prior.max_demand();
    let mut tally = Tally {
        comparisons: 0,
        violations: 0,
        worst_gap: 0.0,
    };
    let mut reports = posteriors.to_vec();
    for u in 0..=max_demand {
        if prior.prob(u) <= 0.0 {
            continue;
        }
        reports[client] = Pmf::point_mass(u, max_demand)?;
        let truthful = greedy_allocate(&reports, supply).shares()[client].min(u);
        for map in maps {
            let conditional =
                ConditionalDistribution::deterministic(max_demand, |x| map[x as usize]);
            reports[client] = bayes_posterior(prior, &conditional, map[u as usize])?;
            let misreport = greedy_allocate(&reports, supply).shares()[client].min(u);
            let gap = f64::from(misreport) - f64::from(truthful);
            tally.comparisons += 1;
            if gap > TOLERANCE {
                tally.violations += 1;
            }
            tally.worst_gap = tally.worst_gap.max(gap);
        }
    }
    Ok(tally)
}

pub fn run(p: &TruthfulnessParams, seed: u64, trials: usize) -> Result<Outcome, HarnessError> {
    let map_cache: Vec<Vec<Vec<u32>>> = (0..=p.max_demand).map(all_maps).collect();
    let rows = run_trials(seed, trials, |k, s| -> Result<Row, HarnessError> {
        let mut rng = trial_rng(seed, k);
        let n = rng.gen_range(1..=p.max_clients);
        let supply = rng.gen_range(0..=p.max_supply);
        let max_demand = rng.gen_range(1..=p.max_demand);
        let priors: Vec<Pmf> = (0..n).map(|_| gen::pmf(&mut rng, max_demand)).collect();
        // What the lender believes about everyone else stays fixed.
        let posteriors: Vec<Pmf> = (0..n).map(|_| gen::pmf(&mut rng, max_demand)).collect();
        let maps = &map_cache[max_demand as usize];

        let mut comparisons = 0;
        let mut violations = 0;
        let mut worst_gap = f64::NEG_INFINITY;
        for (i, prior) in priors.iter().enumerate() {
            let t = check_client(&posteriors, prior, i, supply, maps)?;
            comparisons += t.comparisons;
            violations += t.violations;
            worst_gap = worst_gap.max(t.worst_gap);
        }
        Ok(Row::new()
            .set("experiment", "truthfulness")
            .set("trial", k)
            .set("seed", s)
            .set("clients", n)
            .set("supply", supply)
            .set("max_demand", max_demand)
            .set("misreports", maps.len())
            .set("comparisons", comparisons)
            .set("violations", violations)
            .set("worst_gap", worst_gap))
    })?;

    let sum = |col: &str| -> i64 {
        rows.iter()
            .map(|r| match r.get(col) {
                Some(Cell::Int(v)) => *v,
                _ => 0,
            })
            .sum()
    };
    let comparisons = sum("comparisons");
    let violations = sum("violations");
    let held = comparisons - violations;
    let checks = vec![Check::gate(
        "truthful report is a best response",
        violations == 0 && comparisons > 0,
        format!(
            "{held}/{comparisons} comparisons ({}%)",
            format_float(100.0 * held as f64 / comparisons.max(1) as f64)
        ),
        format!("100% with tolerance {}", format_float(TOLERANCE)),
    )];
    Ok((Table::new(rows), checks, Vec::new()))
}
