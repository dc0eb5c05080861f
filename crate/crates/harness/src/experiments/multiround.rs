//! The withdrawal scenario inside a larger market under the private auction.
//!
//! The last two clients always use exactly one share. The first of them
//! withdraws once it wins round 1; the second either reports truthfully or
//! sits out round 1. Everyone else is truthful with a uniform prior. Each
//! trial plays the same demand draws three times: truthful pair, deviating
//! pair, and all truthful.

use seclend_core::mechanism::Truthful;
use seclend_core::mechanism::{
    per_round_epsilon, run_mechanism, AllocationRule, ClientStrategy, ConditionalWithdrawal,
    FirstRoundZero, TurnOrder,
};
use seclend_core::privauc::{PrivAucConfig, PrivAucParams};
use seclend_core::{Error, Pmf};

use super::Outcome;
use crate::error::HarnessError;
use crate::report::Check;
use crate::runner::run_trials;
use crate::spec::{MultiroundParams, Order};
use crate::stats::Summary;
use crate::table::{format_float, Cell, Row, Table};

fn params(p: &MultiroundParams, epsilon: f64) -> PrivAucParams {
    PrivAucParams {
        alpha: p.alpha,
        max_demand: p.max_demand,
        supply: p.supply,
        epsilon,
        rho: p.rho,
        beta: p.beta,
    }
}

fn configs(p: &MultiroundParams, epsilon: f64) -> Result<Vec<PrivAucConfig>, Error> {
    p.clients
        .iter()
        .map(|&n| PrivAucConfig::new(params(p, epsilon), n))
        .collect()
}

/// Per-round budget shared by every market size: derived from the total
/// budget when one is given, otherwise the first power of two admissible at
/// every size.
pub fn admissible_round_epsilon(p: &MultiroundParams) -> Result<f64, HarnessError> {
    if let Some(total) = p.epsilon {
        let eps = per_round_epsilon(total, p.rounds, p.beta_prime)?;
        configs(p, eps)?;
        return Ok(eps);
    }
    super::privauc::epsilon_candidates()
        .find(|&eps| configs(p, eps).is_ok())
        .ok_or_else(|| {
            HarnessError::Core(Error::Inadmissible(format!(
                "no per-round epsilon in 2^0..2^40 is admissible for every n in {:?}",
                p.clients
            )))
        })
}

struct Play {
    utility: u64,
    won_first: bool,
    lender: u64,
    opt_sum: u64,
}

#[derive(Clone, Copy, PartialEq)]
enum Pair {
    Truthful,
    Deviant,
    AllTruthful,
}

fn play(
    p: &MultiroundParams,
    config: &PrivAucConfig,
    pair: Pair,
    seed: u64,
) -> Result<Play, HarnessError> {
    let n = config.clients();
    let u = p.max_demand;
    let mut priors = vec![Pmf::uniform(u); n - 2];
    priors.push(Pmf::point_mass(1, u)?);
    priors.push(Pmf::point_mass(1, u)?);

    let mut strategies: Vec<Box<dyn ClientStrategy>> = (0..n - 2)
        .map(|_| Box::new(Truthful) as Box<dyn ClientStrategy>)
        .collect();
    strategies.push(match pair {
        Pair::AllTruthful => Box::new(Truthful),
        _ => Box::new(ConditionalWithdrawal),
    });
    strategies.push(match pair {
        Pair::Deviant => Box::new(FirstRoundZero),
        _ => Box::new(Truthful),
    });

    let order = match p.order {
        Order::Index => TurnOrder::Index,
        Order::Shuffled => TurnOrder::Shuffled,
    };
    let rule = AllocationRule::PrivAuc {
        config: config.clone(),
        order,
    };
    let out = run_mechanism(&mut strategies, &priors, p.supply, p.rounds, &rule, seed)?;
    let history = &out.history;
    let opt_sum = (1..=history.len())
        .map(|t| {
            let demand: u64 = history.demands(t).iter().map(|&d| u64::from(d)).sum();
            demand.min(u64::from(p.supply))
        })
        .sum();
    Ok(Play {
        utility: out.client_utilities[n - 1],
        won_first: history.round(1)[n - 2].allocated > 0,
        lender: out.lender_utility,
        opt_sum,
    })
}

fn float(r: &Row, c: &str) -> f64 {
    match r.get(c) {
        Some(Cell::Float(x)) => *x,
        Some(Cell::Int(x)) => *x as f64,
        Some(Cell::Bool(b)) => f64::from(u8::from(*b)),
        _ => f64::NAN,
    }
}

pub fn run(p: &MultiroundParams, seed: u64, trials: usize) -> Result<Outcome, HarnessError> {
    if p.clients.iter().any(|&n| n < 3) {
        return Err(HarnessError::Spec(
            "every market size needs at least 3 clients".into(),
        ));
    }
    if p.rounds == 0 {
        return Err(HarnessError::Spec("rounds must be positive".into()));
    }
    let eps = admissible_round_epsilon(p)?;
    let configs = configs(p, eps)?;
    let sizes = configs.len();
    let rho = p.rho;
    let horizon = p.rounds as f64;

    let rows = run_trials(seed, trials * sizes, |j, s| -> Result<Row, HarnessError> {
        let (size, k) = (j / trials, j % trials);
        let config = &configs[size];
        let truthful = play(p, config, Pair::Truthful, s)?;
        let deviant = play(p, config, Pair::Deviant, s)?;
        let honest = play(p, config, Pair::AllTruthful, s)?;
        let threshold = (1.0 - rho) * honest.opt_sum as f64 - rho * horizon;
        Ok(Row::new()
            .set("experiment", "multiround")
            .set("trial", k)
            .set("seed", s)
            .set("clients", config.clients())
            .set("supply", p.supply)
            .set("max_demand", p.max_demand)
            .set("alpha", p.alpha)
            .set("epsilon_round", eps)
            .set("rho", rho)
            .set("beta", p.beta)
            .set("rounds", p.rounds)
            .set("utility_truthful", truthful.utility)
            .set("utility_deviant", deviant.utility)
            .set(
                "advantage",
                deviant.utility as i64 - truthful.utility as i64,
            )
            .set("first_round_win_truthful", truthful.won_first)
            .set("first_round_win_deviant", deviant.won_first)
            .set("lender_utility", honest.lender)
            .set("opt_sum", honest.opt_sum)
            .set("lender_threshold", threshold)
            .set("lender_margin", honest.lender as f64 - threshold))
    })?;

    let summarize = |size: usize, c: &str| {
        let xs: Vec<f64> = rows[size * trials..(size + 1) * trials]
            .iter()
            .map(|r| float(r, c))
            .collect();
        Summary::of(&xs)
    };

    let total_eps = eps * 2.0 * (2.0 * horizon * (1.0 / p.beta_prime).ln()).sqrt();
    let mut checks = vec![Check::info(
        "privacy budget",
        format!(
            "per round {}, total over {} rounds {}",
            format_float(eps),
            p.rounds,
            format_float(total_eps)
        ),
    )];

    let advantages: Vec<Summary> = (0..sizes).map(|s| summarize(s, "advantage")).collect();
    let listing = |f: &dyn Fn(usize) -> String| -> String {
        (0..sizes)
            .map(|s| format!("n={}: {}", p.clients[s], f(s)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let decreasing = sizes > 1 && advantages.windows(2).all(|w| w[1].mean < w[0].mean);
    checks.push(Check::gate(
        "deviation advantage strictly decreases in n",
        trials > 0 && decreasing,
        listing(&|s| {
            format!(
                "{} (se {})",
                format_float(advantages[s].mean),
                format_float(advantages[s].se())
            )
        }),
        "strictly decreasing".to_owned(),
    ));
    checks.push(Check::info(
        "absolute deviation advantage",
        listing(&|s| format_float(advantages[s].mean.abs())),
    ));
    checks.push(Check::info(
        "withdrawing client wins round 1, deviant minus truthful",
        listing(&|s| {
            format_float(
                summarize(s, "first_round_win_deviant").mean
                    - summarize(s, "first_round_win_truthful").mean,
            )
        }),
    ));

    let margins: Vec<Summary> = (0..sizes).map(|s| summarize(s, "lender_margin")).collect();
    let lender_ok = trials > 1 && margins.iter().all(|m| m.lower95() >= 0.0);
    checks.push(Check::gate(
        "all-truthful lender utility above (1 - rho) sum OPT - rho T",
        lender_ok,
        listing(&|s| {
            format!(
                "utility {} vs threshold {}, margin lower bound {}",
                format_float(summarize(s, "lender_utility").mean),
                format_float(summarize(s, "lender_threshold").mean),
                format_float(margins[s].lower95())
            )
        }),
        "95% lower bound on margin >= 0 at every n".to_owned(),
    ));

    // Reference terms of the approximate truthfulness bound
    // u(deviate) <= e^(2 eps) u(truthful) + 2 beta U T + e^eps beta^2 / (1 - beta^2 / T).
    let beta = p.beta;
    let b2t = beta * beta / horizon;
    checks.push(Check::info(
        "approximate truthfulness reference",
        format!(
            "e^(2 eps) = {}, 2 beta U T = {}, e^eps beta^2/(1 - beta^2/T) = {}, \
             condition sqrt(beta + (1 - beta) rho) <= beta^2/T {}",
            format_float((2.0 * total_eps).exp()),
            format_float(2.0 * beta * f64::from(p.max_demand) * horizon),
            format_float(total_eps.exp() * beta * beta / (1.0 - b2t)),
            if (beta + (1.0 - beta) * rho).sqrt() <= b2t {
                "holds"
            } else {
                "fails"
            }
        ),
    ));

    Ok((Table::new(rows), checks, Vec::new()))
}
