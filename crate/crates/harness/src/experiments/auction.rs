use rand::Rng;
use seclend_core::auction::{run_auction, walrasian_check};
use seclend_core::greedy::brute_force_by_value;
use seclend_core::Valuation;

use super::{gen, Outcome};
use crate::error::HarnessError;
use crate::report::{ratio, Check};
use crate::runner::{run_trials, trial_rng};
use crate::spec::AuctionParams;
use crate::table::{Cell, Row, Table};

pub const TOLERANCE: f64 = 1e-9;

pub fn run(p: &AuctionParams, seed: u64, trials: usize) -> Result<Outcome, HarnessError> {
    let (lo, hi) = p.alpha_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(HarnessError::Spec(format!(
            "alpha_range must satisfy 0 < low <= high, got ({lo}, {hi})"
        )));
    }
    let rows = run_trials(seed, trials, |k, s| -> Result<Row, HarnessError> {
        let mut rng = trial_rng(seed, k);
        let n = rng.gen_range(1..=p.max_clients);
        let supply = rng.gen_range(1..=p.max_supply);
        let max_demand = rng.gen_range(1..=p.max_demand);
        let alpha = if lo == hi { lo } else { rng.gen_range(lo..hi) };
        let vals: Vec<Valuation> = (0..n).map(|_| gen::dmr(&mut rng, max_demand)).collect();

        let out = run_auction(&vals, supply, alpha)?;
        let (_, opt) = brute_force_by_value(&vals, supply)?;
        let welfare: f64 = vals
            .iter()
            .zip(out.allocation.shares())
            .map(|(v, &s)| v.value(s))
            .sum();
        let nf = n as f64;
        let v = f64::from(supply);
        let round_bound = v / alpha + 1.0;
        // Each non-final pass has a bid, every V bids raise the price by alpha,
        // and nothing bids above 1, so V (floor(1/alpha) + 1) bids at most.
        let level_bound = v * ((1.0 / alpha).floor() + 1.0) + 1.0;
        // Welfare is compared per client: (1/n) sum v >= OPT/n - alpha V / n.
        let gap = welfare / nf - (opt / nf - alpha * v / nf);
        Ok(Row::new()
            .set("experiment", "auction-welfare")
            .set("trial", k)
            .set("seed", s)
            .set("clients", n)
            .set("supply", supply)
            .set("max_demand", max_demand)
            .set("alpha", alpha)
            .set("rounds", out.rounds)
            .set("round_bound", round_bound)
            .set("level_bound", level_bound)
            .set("welfare", welfare)
            .set("opt_welfare", opt)
            .set("welfare_gap", gap)
            .set(
                "walrasian",
                walrasian_check(&vals, &out.allocation, out.final_price, alpha),
            )
            .set("final_price", out.final_price)
            .set("total_bids", out.total_bids))
    })?;

    let count = |pred: &dyn Fn(&Row) -> bool| rows.iter().filter(|r| pred(r)).count();
    let float = |r: &Row, c: &str| match r.get(c) {
        Some(Cell::Float(x)) => *x,
        Some(Cell::Int(x)) => *x as f64,
        _ => f64::NAN,
    };
    let rounds_ok = count(&|r| float(r, "rounds") <= float(r, "round_bound"));
    let levels_ok = count(&|r| float(r, "rounds") <= float(r, "level_bound"));
    let welfare_ok = count(&|r| float(r, "welfare_gap") >= -TOLERANCE);
    let walrasian_ok = count(&|r| r.get("walrasian") == Some(&Cell::Bool(true)));
    let checks = vec![
        Check::gate(
            "rounds within V/alpha + 1",
            rounds_ok == trials,
            ratio(rounds_ok, trials),
            ratio(trials, trials),
        ),
        Check::gate(
            "rounds within V (floor(1/alpha) + 1) + 1",
            levels_ok == trials,
            ratio(levels_ok, trials),
            ratio(trials, trials),
        ),
        Check::gate(
            "welfare within alpha V / n of optimum",
            welfare_ok == trials,
            ratio(welfare_ok, trials),
            ratio(trials, trials),
        ),
        Check::gate(
            "approximate walrasian equilibrium",
            walrasian_ok == trials,
            ratio(walrasian_ok, trials),
            ratio(trials, trials),
        ),
    ];
    Ok((Table::new(rows), checks, Vec::new()))
}
