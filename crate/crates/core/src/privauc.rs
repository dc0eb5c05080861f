//! Jointly differentially private ascending auction.
//!
//! The only information shared between clients is a private running count of
//! bids. Each client turn feeds one bit (1 for a bid, 0 otherwise) into the
//! counter, so one round of `n` turns spans exactly `n` counter steps. A
//! client reads the published count to estimate the price and how many bids
//! have landed since it acquired each of its shares; a share is given back
//! once that estimate reaches the slack supply `V' = V - 2E`. Bidding stops
//! early once a round's noisy bid count falls to `rho n - 2E`.
//!
//! [`BillboardClient`] is the whole of a client's decision logic. It is built
//! from one valuation and the public config, and afterwards only sees the
//! published counts through a [`Billboard`], so each final share count is a
//! function of the client's own valuation and the public transcript.

use std::fmt;

use crate::auction::wants_share;
use crate::dpcount::{bid_cap, usefulness_bound, PrivateCounter};
use crate::error::{Error, Result};
use crate::model::{Allocation, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Laplace,
    /// Exact counts. The slack `E` is still computed from the privacy
    /// parameters, so this isolates the effect of the noise itself.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivAucParams {
    pub alpha: f64,
    pub max_demand: u32,
    pub supply: u32,
    pub epsilon: f64,
    pub rho: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub label: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub conditions: Vec<Condition>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.holds)
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.conditions.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            let mark = if c.holds { "ok  " } else { "FAIL" };
            write!(f, "{mark} {}: {}", c.label, c.detail)?;
        }
        Ok(())
    }
}

/// Parameters plus every quantity derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivAucConfig {
    params: PrivAucParams,
    clients: usize,
    rounds_exact: f64,
    rounds: usize,
    epsilon_prime: f64,
    error: f64,
    effective_supply: f64,
    bid_cap: Option<u64>,
    noise: NoiseMode,
    monotone: bool,
}

impl PrivAucConfig {
    /// Derives the run quantities and rejects inadmissible parameters.
    pub fn new(params: PrivAucParams, clients: usize) -> Result<Self> {
        let config = PrivAucConfig::unchecked(params, clients)?;
        let report = config.admissibility();
        if !report.admissible() {
            let failed: Vec<String> = report
                .failures()
                .map(|c| format!("{}: {}", c.label, c.detail))
                .collect();
            return Err(Error::Inadmissible(failed.join("; ")));
        }
        Ok(config)
    }

    /// Derives the run quantities without the admissibility check.
    pub fn unchecked(params: PrivAucParams, clients: usize) -> Result<Self> {
        let PrivAucParams {
            alpha,
            supply,
            epsilon,
            rho,
            beta,
            ..
        } = params;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::domain(
                "rho",
                format!("must lie in (0, 1), got {rho}"),
            ));
        }
        if clients == 0 {
            return Err(Error::domain("clients", "need at least one client"));
        }
        if supply == 0 {
            return Err(Error::domain("supply", "must be positive"));
        }

        let n = clients as f64;
        let v = f64::from(supply);
        let rounds_exact = 2.0 * v / (alpha * rho * n);
        let rounds = (rounds_exact.ceil() as usize).max(1);
        let epsilon_prime = epsilon * alpha * rho * n / (2.0 * v);
        let error = usefulness_bound(clients * rounds, epsilon_prime, beta)?;
        let bid_cap = bid_cap(v, alpha, error, rho, clients).ok();

        Ok(PrivAucConfig {
            params,
            clients,
            rounds_exact,
            rounds,
            epsilon_prime,
            error,
            effective_supply: v - 2.0 * error,
            bid_cap,
            noise: NoiseMode::Laplace,
            monotone: false,
        })
    }

    pub fn with_noise(mut self, noise: NoiseMode) -> Self {
        self.noise = noise;
        self
    }

    /// Publish the running maximum of the counter instead of raw counts.
    pub fn with_monotone(mut self, on: bool) -> Self {
        self.monotone = on;
        self
    }

    pub fn params(&self) -> &PrivAucParams {
        &self.params
    }

    pub fn clients(&self) -> usize {
        self.clients
    }

    /// `2V / (alpha rho n)` before rounding up.
    pub fn rounds_exact(&self) -> f64 {
        self.rounds_exact
    }

    /// Round limit, `ceil(2V / (alpha rho n))`.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn stream_len(&self) -> usize {
        self.clients * self.rounds
    }

    /// Counter privacy parameter `epsilon alpha rho n / (2V)`.
    pub fn epsilon_prime(&self) -> f64 {
        self.epsilon_prime
    }

    /// Counter error bound `E`.
    pub fn error(&self) -> f64 {
        self.error
    }

    /// `V' = V - 2E`.
    pub fn effective_supply(&self) -> f64 {
        self.effective_supply
    }

    pub fn bid_cap(&self) -> Option<u64> {
        self.bid_cap
    }

    /// A round with at most this many noisy bids ends the auction.
    pub fn stop_threshold(&self) -> f64 {
        self.params.rho * self.clients as f64 - 2.0 * self.error
    }

    pub fn noise(&self) -> NoiseMode {
        self.noise
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }

    pub fn admissibility(&self) -> AdmissibilityReport {
        let PrivAucParams {
            alpha, supply, rho, ..
        } = self.params;
        let n = self.clients as f64;
        let v = f64::from(supply);
        let e = self.error;
        let lo = alpha * v / rho;
        let hi = v / (alpha * rho);
        AdmissibilityReport {
            conditions: vec![
                Condition {
                    label: "(1) alpha V / rho <= n <= V / (alpha rho)",
                    holds: lo <= n && n <= hi,
                    detail: format!("{lo} <= {n} <= {hi}"),
                },
                Condition {
                    label: "(2) n >= 8E / rho",
                    holds: n >= 8.0 * e / rho,
                    detail: format!("n = {n}, 8E/rho = {}", 8.0 * e / rho),
                },
                Condition {
                    label: "(3) E / V <= rho / 8",
                    holds: e / v <= rho / 8.0,
                    detail: format!("E/V = {}, rho/8 = {}", e / v, rho / 8.0),
                },
                Condition {
                    label: "V' = V - 2E > 0",
                    holds: self.effective_supply > 0.0,
                    detail: format!("V' = {}", self.effective_supply),
                },
            ],
        }
    }
}

/// The first `epsilon` among `candidates` that makes the parameters admissible.
pub fn first_admissible_epsilon(
    params: PrivAucParams,
    clients: usize,
    candidates: impl IntoIterator<Item = f64>,
) -> Option<PrivAucConfig> {
    candidates
        .into_iter()
        .find_map(|epsilon| PrivAucConfig::new(PrivAucParams { epsilon, ..params }, clients).ok())
}

/// Read-only view of the published counts `C[1..=t]`.
#[derive(Debug, Clone, Copy)]
pub struct Billboard<'a> {
    counts: &'a [f64],
}

impl<'a> Billboard<'a> {
    pub fn new(counts: &'a [f64]) -> Self {
        Billboard { counts }
    }

    /// Steps published so far.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `C[t]`, with `C[t] = 0` for `t <= 0`.
    pub fn count(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.counts[t - 1]
        }
    }

    /// `alpha * floor(C[t] / V')`, floored at zero.
    pub fn price(&self, t: usize, alpha: f64, effective_supply: f64) -> f64 {
        alpha * (self.count(t) / effective_supply).floor().max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldShare {
    /// Step at which the share was acquired.
    pub acquired_at: usize,
    /// Published bids since acquisition, `C[now] - C[acquired_at]`.
    pub count: f64,
    pub price: f64,
}

/// One client's side of the auction.
#[derive(Debug, Clone)]
pub struct BillboardClient {
    valuation: Valuation,
    alpha: f64,
    effective_supply: f64,
    max_demand: u32,
    cap: u64,
    bids: u64,
    held: Vec<HeldShare>,
}

impl BillboardClient {
    pub fn new(valuation: Valuation, config: &PrivAucConfig) -> Self {
        BillboardClient {
            max_demand: config.params.max_demand.min(valuation.max_units()),
            valuation,
            alpha: config.params.alpha,
            effective_supply: config.effective_supply,
            cap: config.bid_cap.unwrap_or(u64::MAX),
            bids: 0,
            held: Vec::new(),
        }
    }

    /// Acts at step `t`, seeing `C[1..t-1]`. Returns the bit to feed.
    pub fn turn(&mut self, board: &Billboard<'_>, t: usize) -> bool {
        let now = t - 1;
        self.release(board, now);

        let price = board.price(now, self.alpha, self.effective_supply);
        let held = self.held.len() as u32;
        if held >= self.max_demand || self.bids >= self.cap {
            return false;
        }
        match self.valuation.marginal(held + 1) {
            Some(m) if wants_share(m, price) => {
                self.bids += 1;
                self.held.push(HeldShare {
                    acquired_at: t,
                    count: 0.0,
                    price,
                });
                true
            }
            _ => false,
        }
    }

    /// Final release against the whole published stream.
    pub fn settle(&mut self, board: &Billboard<'_>) {
        self.release(board, board.len());
    }

    fn release(&mut self, board: &Billboard<'_>, now: usize) {
        let latest = board.count(now);
        for share in &mut self.held {
            share.count = latest - board.count(share.acquired_at);
        }
        let threshold = self.effective_supply;
        self.held.retain(|s| s.count < threshold);
    }

    pub fn shares(&self) -> u32 {
        self.held.len() as u32
    }

    pub fn held(&self) -> &[HeldShare] {
        &self.held
    }

    pub fn bids(&self) -> u64 {
        self.bids
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptRow {
    pub t: usize,
    pub client: usize,
    pub bit: bool,
    pub noisy_count: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub client: usize,
    pub step: usize,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivAucOutcome {
    /// Built without the feasibility check so that a violation can be observed.
    pub allocation: Allocation,
    pub final_price: f64,
    /// Published price at the end of each round.
    pub prices: Vec<f64>,
    pub rounds: usize,
    pub stopped_early: bool,
    pub total_bids: u64,
    pub bids_per_client: Vec<u64>,
    /// Shares still held at the end, with when and at what price they were won.
    pub held: Vec<Acquisition>,
    /// Largest counter error over the run. Diagnostic only.
    pub counter_max_error: f64,
    /// Empty unless run in diagnostic mode.
    pub transcript: Vec<TranscriptRow>,
}

pub fn run_privauc(
    valuations: &[Valuation],
    config: &PrivAucConfig,
    seed: u64,
) -> Result<PrivAucOutcome> {
    privauc(valuations, config, seed, false)
}

/// Like [`run_privauc`] but also records the per-step transcript.
pub fn run_privauc_diagnostic(
    valuations: &[Valuation],
    config: &PrivAucConfig,
    seed: u64,
) -> Result<PrivAucOutcome> {
    privauc(valuations, config, seed, true)
}

fn privauc(
    valuations: &[Valuation],
    config: &PrivAucConfig,
    seed: u64,
    record: bool,
) -> Result<PrivAucOutcome> {
    let n = config.clients;
    if valuations.len() != n {
        return Err(Error::LengthMismatch {
            left: valuations.len(),
            right: n,
        });
    }
    let report = config.admissibility();
    if !report.admissible() {
        return Err(Error::Inadmissible(report.to_string()));
    }

    let mut counter = match config.noise {
        NoiseMode::Laplace => PrivateCounter::new(config.stream_len(), config.epsilon_prime, seed)?,
        NoiseMode::Disabled => PrivateCounter::noiseless(config.stream_len())?,
    }
    .with_monotone(config.monotone);

    let mut clients: Vec<BillboardClient> = valuations
        .iter()
        .map(|v| BillboardClient::new(v.clone(), config))
        .collect();

    let alpha = config.params.alpha;
    let vp = config.effective_supply;
    let threshold = config.stop_threshold();
    let mut transcript = Vec::new();
    let mut prices = Vec::with_capacity(config.rounds);
    let mut round_bids = n as f64;
    let mut rounds = 0;
    let mut t = 0;

    while round_bids > threshold && rounds < config.rounds {
        for (i, client) in clients.iter_mut().enumerate() {
            t += 1;
            let board = Billboard::new(counter.released());
            let price = board.price(t - 1, alpha, vp);
            let bit = client.turn(&board, t);
            let published = counter.feed(bit)?;
            if record {
                transcript.push(TranscriptRow {
                    t,
                    client: i,
                    bit,
                    noisy_count: published,
                    price,
                });
            }
        }
        rounds += 1;
        let board = Billboard::new(counter.released());
        round_bids = board.count(t) - board.count(t - n);
        prices.push(board.price(t, alpha, vp));
    }

    let board = Billboard::new(counter.released());
    for client in &mut clients {
        client.settle(&board);
    }

    let shares: Vec<u32> = clients.iter().map(BillboardClient::shares).collect();
    let held = clients
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            c.held().iter().map(move |s| Acquisition {
                client: i,
                step: s.acquired_at,
                price: s.price,
            })
        })
        .collect();

    Ok(PrivAucOutcome {
        allocation: Allocation::unchecked(shares, config.params.supply),
        final_price: board.price(t, alpha, vp),
        prices,
        rounds,
        stopped_early: round_bids <= threshold,
        total_bids: clients.iter().map(BillboardClient::bids).sum(),
        bids_per_client: clients.iter().map(BillboardClient::bids).collect(),
        held,
        counter_max_error: counter.max_error(),
        transcript,
    })
}

/// Clients that would not bid again at `price`: those at their demand cap
/// and those whose next marginal is below the price.
pub fn satisfied_clients(
    valuations: &[Valuation],
    allocation: &Allocation,
    price: f64,
) -> Vec<usize> {
    valuations
        .iter()
        .zip(allocation.shares())
        .enumerate()
        .filter(|(_, (v, &s))| match v.marginal(s + 1) {
            None => true,
            Some(m) => !wants_share(m, price),
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(epsilon: f64) -> PrivAucParams {
        PrivAucParams {
            alpha: 0.05,
            max_demand: 4,
            supply: 40,
            epsilon,
            rho: 0.25,
            beta: 0.05,
        }
    }

    #[test]
    fn derived_quantities() {
        let c = PrivAucConfig::unchecked(params(1.0), 400).unwrap();
        assert_eq!(c.rounds(), 16);
        assert!((c.rounds_exact() - 16.0).abs() < 1e-12);
        assert!((c.epsilon_prime() - 0.0625).abs() < 1e-12);
        assert_eq!(c.stream_len(), 6400);
        let e = usefulness_bound(6400, 0.0625, 0.05).unwrap();
        assert_eq!(c.error(), e);
        assert!((c.effective_supply() - (40.0 - 2.0 * e)).abs() < 1e-9);
    }

    #[test]
    fn small_epsilon_is_inadmissible() {
        let c = PrivAucConfig::unchecked(params(1.0), 400).unwrap();
        let report = c.admissibility();
        assert!(!report.admissible());
        let failed: Vec<_> = report.failures().map(|c| c.label).collect();
        assert!(failed.iter().any(|l| l.starts_with("(2)")));
        assert!(failed.iter().any(|l| l.starts_with("(3)")));
        assert!(failed.iter().any(|l| l.starts_with("V'")));
        assert!(matches!(
            PrivAucConfig::new(params(1.0), 400),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn epsilon_scan_finds_a_point() {
        let grid = (0..24).map(|k| 2f64.powi(k));
        let c = first_admissible_epsilon(params(1.0), 400, grid).unwrap();
        assert!(c.admissibility().admissible());
        let half = PrivAucConfig::unchecked(params(c.params().epsilon / 2.0), 400).unwrap();
        assert!(!half.admissibility().admissible());
    }

    #[test]
    fn condition_one_bounds_n() {
        let c = PrivAucConfig::unchecked(params(1e9), 4000).unwrap();
        assert!(!c.admissibility().conditions[0].holds);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(PrivAucConfig::unchecked(
            PrivAucParams {
                rho: 1.0,
                ..params(1.0)
            },
            10
        )
        .is_err());
        assert!(PrivAucConfig::unchecked(
            PrivAucParams {
                alpha: 0.0,
                ..params(1.0)
            },
            10
        )
        .is_err());
        assert!(PrivAucConfig::unchecked(
            PrivAucParams {
                beta: 0.0,
                ..params(1.0)
            },
            10
        )
        .is_err());
        assert!(PrivAucConfig::unchecked(params(1.0), 0).is_err());
    }

    #[test]
    fn billboard_reads_zero_before_start() {
        let counts = [1.0, 2.0, 2.0];
        let b = Billboard::new(&counts);
        assert_eq!(b.count(0), 0.0);
        assert_eq!(b.count(3), 2.0);
        assert_eq!(b.price(3, 0.1, 1.5), 0.1);
        let neg = [-4.0];
        assert_eq!(Billboard::new(&neg).price(1, 0.1, 1.5), 0.0);
    }

    #[test]
    fn satisfied_by_cap_or_price() {
        let vals = vec![
            Valuation::new(vec![0.9, 0.8]).unwrap(),
            Valuation::new(vec![0.9, 0.3]).unwrap(),
            Valuation::new(vec![0.9, 0.8]).unwrap(),
        ];
        let alloc = Allocation::new(vec![2, 1, 1], 4).unwrap();
        assert_eq!(satisfied_clients(&vals, &alloc, 0.5), vec![0, 1]);
        assert_eq!(satisfied_clients(&vals, &alloc, 1.05), vec![0, 1, 2]);
    }
}
