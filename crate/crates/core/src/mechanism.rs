//! Repeated allocation with strategic clients.
//!
//! Every round each client draws a demand from its prior, a strategy turns
//! the demand and the client's own history into a request, and the lender
//! allocates as though the requests were truthful (point-mass posteriors),
//! using either the greedy rule or the private auction.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::greedy::{greedy_allocate, greedy_with, TieBreak};
use crate::model::{
    tail_probabilities, Allocation, ConditionalDistribution, Pmf, RoundRecord, Valuation,
};
use crate::privauc::{run_privauc, PrivAucConfig};

/// What a strategy may see: the client's own past records and nothing else.
#[derive(Debug, Clone, Copy)]
pub struct ClientView<'a> {
    client: usize,
    round: usize,
    max_demand: u32,
    records: &'a [RoundRecord],
}

impl<'a> ClientView<'a> {
    pub fn client(&self) -> usize {
        self.client
    }

    /// The round being played, starting at 1.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn max_demand(&self) -> u32 {
        self.max_demand
    }

    /// This client's records for rounds `1..round`.
    pub fn records(&self) -> &'a [RoundRecord] {
        self.records
    }
}

pub trait ClientStrategy: Send {
    fn name(&self) -> String;

    fn request(&mut self, view: &ClientView<'_>, demand: u32, rng: &mut dyn RngCore) -> u32;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Truthful;

impl ClientStrategy for Truthful {
    fn name(&self) -> String {
        "truthful".into()
    }

    fn request(&mut self, _: &ClientView<'_>, demand: u32, _: &mut dyn RngCore) -> u32 {
        demand
    }
}

/// Asks for `k` more than the demand, capped at `U`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantOverRequest(pub u32);

impl ClientStrategy for ConstantOverRequest {
    fn name(&self) -> String {
        format!("over-request({})", self.0)
    }

    fn request(&mut self, view: &ClientView<'_>, demand: u32, _: &mut dyn RngCore) -> u32 {
        demand.saturating_add(self.0).min(view.max_demand())
    }
}

/// Draws the request from a fixed `Q(r | u)` every round.
#[derive(Debug, Clone)]
pub struct FixedDistribution(pub ConditionalDistribution);

impl ClientStrategy for FixedDistribution {
    fn name(&self) -> String {
        "fixed-distribution".into()
    }

    fn request(&mut self, _: &ClientView<'_>, demand: u32, mut rng: &mut dyn RngCore) -> u32 {
        self.0.row(demand).sample(&mut rng)
    }
}

/// A fixed report for each demand, `map[u]`.
#[derive(Debug, Clone)]
pub struct FixedMap(pub Vec<u32>);

impl ClientStrategy for FixedMap {
    fn name(&self) -> String {
        format!("map{:?}", self.0)
    }

    fn request(&mut self, _: &ClientView<'_>, demand: u32, _: &mut dyn RngCore) -> u32 {
        self.0[demand as usize]
    }
}

/// Truthful, except that winning anything in round 1 means requesting
/// nothing in every later round.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConditionalWithdrawal;

impl ClientStrategy for ConditionalWithdrawal {
    fn name(&self) -> String {
        "conditional-withdrawal".into()
    }

    fn request(&mut self, view: &ClientView<'_>, demand: u32, _: &mut dyn RngCore) -> u32 {
        let won_first = view
            .records()
            .first()
            .is_some_and(|r| r.round == 1 && r.allocated > 0);
        if won_first {
            0
        } else {
            demand
        }
    }
}

/// Requests nothing in round 1 and is truthful afterwards.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstRoundZero;

impl ClientStrategy for FirstRoundZero {
    fn name(&self) -> String {
        "first-round-zero".into()
    }

    fn request(&mut self, view: &ClientView<'_>, demand: u32, _: &mut dyn RngCore) -> u32 {
        if view.round() == 1 {
            0
        } else {
            demand
        }
    }
}

/// Append-only record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    by_round: Vec<Vec<RoundRecord>>,
    by_client: Vec<Vec<RoundRecord>>,
    demands: Vec<Vec<u32>>,
}

impl History {
    pub fn new(clients: usize) -> Self {
        History {
            by_round: Vec::new(),
            by_client: vec![Vec::new(); clients],
            demands: Vec::new(),
        }
    }

    /// Rounds closed so far.
    pub fn len(&self) -> usize {
        self.by_round.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_round.is_empty()
    }

    pub fn clients(&self) -> usize {
        self.by_client.len()
    }

    /// Records of round `t` (1-indexed).
    pub fn round(&self, t: usize) -> &[RoundRecord] {
        &self.by_round[t - 1]
    }

    pub fn rounds(&self) -> &[Vec<RoundRecord>] {
        &self.by_round
    }

    /// Client `i`'s own slice.
    pub fn client(&self, i: usize) -> &[RoundRecord] {
        &self.by_client[i]
    }

    /// True demands of round `t` (1-indexed). Not visible to strategies.
    pub fn demands(&self, t: usize) -> &[u32] {
        &self.demands[t - 1]
    }

    fn view(&self, client: usize, max_demand: u32) -> ClientView<'_> {
        ClientView {
            client,
            round: self.len() + 1,
            max_demand,
            records: &self.by_client[client],
        }
    }

    fn close_round(&mut self, records: Vec<RoundRecord>, demands: Vec<u32>) {
        for r in &records {
            self.by_client[r.client].push(*r);
        }
        self.by_round.push(records);
        self.demands.push(demands);
    }
}

/// Order in which clients take their turns inside the private auction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TurnOrder {
    #[default]
    Index,
    /// A fresh uniformly random order each round, drawn from public
    /// randomness. Plays the role that random tie-breaking plays for greedy.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AllocationRule {
    Greedy {
        ties: TieBreak,
    },
    PrivAuc {
        config: PrivAucConfig,
        order: TurnOrder,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismOutcome {
    pub history: History,
    /// Executed shares summed over rounds, per client.
    pub client_utilities: Vec<u64>,
    /// Executed shares summed over rounds and clients.
    pub lender_utility: u64,
}

/// Independent random streams derived from one seed, so that changing one
/// client's strategy leaves demands and tie-breaking draws unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Demands,
    Ties,
    Auction,
    Exploration,
    Client(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Demands => 0,
            Stream::Ties => 1,
            Stream::Auction => 2,
            Stream::Exploration => 3,
            Stream::Client(i) => 16 + i as u64,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// Per-round budget `epsilon / (2 sqrt(2 T ln(1/beta')))` so that `T` rounds
/// compose to roughly `epsilon` under advanced composition.
pub fn per_round_epsilon(total: f64, rounds: usize, beta_prime: f64) -> Result<f64> {
    if !(total > 0.0) {
        return Err(Error::domain(
            "epsilon",
            format!("must be positive, got {total}"),
        ));
    }
    if !(beta_prime > 0.0 && beta_prime < 1.0) {
        return Err(Error::domain(
            "beta'",
            format!("must lie in (0, 1), got {beta_prime}"),
        ));
    }
    if rounds == 0 {
        return Err(Error::domain("rounds", "must be positive"));
    }
    Ok(total / (2.0 * (2.0 * rounds as f64 * (1.0 / beta_prime).ln()).sqrt()))
}

pub fn run_mechanism(
    strategies: &mut [Box<dyn ClientStrategy>],
    priors: &[Pmf],
    supply: u32,
    rounds: usize,
    rule: &AllocationRule,
    seed: u64,
) -> Result<MechanismOutcome> {
    let n = strategies.len();
    if priors.len() != n {
        return Err(Error::LengthMismatch {
            left: priors.len(),
            right: n,
        });
    }
    if let AllocationRule::PrivAuc { config, .. } = rule {
        if config.clients() != n {
            return Err(Error::domain(
                "clients",
                format!("config built for {} clients, run has {n}", config.clients()),
            ));
        }
        if config.params().supply != supply {
            return Err(Error::domain(
                "supply",
                format!(
                    "config built for V = {}, run has {supply}",
                    config.params().supply
                ),
            ));
        }
    }

    let mut demand_rng = stream_rng(seed, Stream::Demands);
    let mut tie_rng = stream_rng(seed, Stream::Ties);
    let mut auction_rng = stream_rng(seed, Stream::Auction);
    let mut client_rngs: Vec<ChaCha20Rng> = (0..n)
        .map(|i| stream_rng(seed, Stream::Client(i)))
        .collect();

    let mut history = History::new(n);
    let mut client_utilities = vec![0u64; n];

    for round in 1..=rounds {
        let demands: Vec<u32> = priors.iter().map(|q| q.sample(&mut demand_rng)).collect();

        let mut requests = Vec::with_capacity(n);
        for (i, strategy) in strategies.iter_mut().enumerate() {
            let max = priors[i].max_demand();
            let view = history.view(i, max);
            let r = strategy.request(&view, demands[i], &mut client_rngs[i]);
            if r > max {
                return Err(Error::Protocol {
                    client: i,
                    round,
                    request: r,
                    max,
                });
            }
            requests.push(r);
        }

        let valuations: Vec<Valuation> = requests
            .iter()
            .zip(priors)
            .map(|(&r, q)| Valuation::point_mass(r, q.max_demand()))
            .collect();
        let allocation = match rule {
            AllocationRule::Greedy { ties } => {
                greedy_with(&valuations, supply, *ties, &mut tie_rng)
            }
            AllocationRule::PrivAuc { config, order } => {
                let mut turns: Vec<usize> = (0..n).collect();
                if *order == TurnOrder::Shuffled {
                    turns.shuffle(&mut tie_rng);
                }
                let ordered: Vec<Valuation> =
                    turns.iter().map(|&i| valuations[i].clone()).collect();
                let out = run_privauc(&ordered, config, auction_rng.next_u64())?;
                let mut shares = vec![0; n];
                for (k, &i) in turns.iter().enumerate() {
                    shares[i] = out.allocation.shares()[k];
                }
                Allocation::unchecked(shares, supply)
            }
        };

        let records: Vec<RoundRecord> = (0..n)
            .map(|i| {
                let s = allocation.shares()[i];
                let executed = s.min(demands[i]);
                client_utilities[i] += u64::from(executed);
                RoundRecord {
                    round,
                    client: i,
                    request: requests[i],
                    allocated: s,
                    executed,
                }
            })
            .collect();
        history.close_round(records, demands);
    }

    let lender_utility = client_utilities.iter().sum();
    Ok(MechanismOutcome {
        history,
        client_utilities,
        lender_utility,
    })
}

/// Estimated request models from the exploration phase.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveLearning {
    max_demand: u32,
    supply: u32,
    /// `estimates[i][r]` is the empirical `Q_i(u | r)`, `None` for an unseen cell.
    estimates: Vec<Vec<Option<Pmf>>>,
    samples: Vec<Vec<u64>>,
    /// Exploration handed out fewer than `U` shares, so large demands were cut off.
    pub censored: bool,
}

impl NaiveLearning {
    pub fn estimate(&self, client: usize, request: u32) -> Option<&Pmf> {
        self.estimates[client][request as usize].as_ref()
    }

    pub fn samples(&self, client: usize, request: u32) -> u64 {
        self.samples[client][request as usize]
    }

    /// The posterior used for allocation; an unseen cell is read as truthful.
    pub fn posterior(&self, client: usize, request: u32) -> Pmf {
        self.estimate(client, request).cloned().unwrap_or_else(|| {
            Pmf::point_mass(request, self.max_demand).expect("request within 0..=U")
        })
    }

    /// Greedy against the learned posteriors.
    pub fn allocate(&self, requests: &[u32]) -> Allocation {
        let posteriors: Vec<Pmf> = requests
            .iter()
            .enumerate()
            .map(|(i, &r)| self.posterior(i, r))
            .collect();
        greedy_allocate(&posteriors, self.supply)
    }

    /// Greedy valuations the learned posteriors induce, for inspection.
    pub fn valuations(&self, requests: &[u32]) -> Vec<Valuation> {
        requests
            .iter()
            .enumerate()
            .map(|(i, &r)| tail_probabilities(&self.posterior(i, r)))
            .collect()
    }
}

/// Gives each client all `min(V, U)` shares alone for `exploration_rounds`
/// rounds, records the executed count against the request, and returns the
/// empirical conditionals.
pub fn naive_learning_mechanism(
    priors: &[Pmf],
    conditionals: &[ConditionalDistribution],
    supply: u32,
    exploration_rounds: usize,
    seed: u64,
) -> Result<NaiveLearning> {
    if exploration_rounds == 0 {
        return Err(Error::domain("exploration rounds", "need at least one"));
    }
    if priors.len() != conditionals.len() {
        return Err(Error::LengthMismatch {
            left: conditionals.len(),
            right: priors.len(),
        });
    }
    let max_demand = priors.iter().map(Pmf::max_demand).max().unwrap_or(0);
    if priors
        .iter()
        .zip(conditionals)
        .any(|(p, c)| p.max_demand() != max_demand || c.max_demand() != max_demand)
    {
        return Err(Error::InvalidPmf(
            "priors and conditionals must share U".into(),
        ));
    }

    let mut rng = stream_rng(seed, Stream::Exploration);
    let grant = supply.min(max_demand);
    let cells = max_demand as usize + 1;
    let mut counts = vec![vec![vec![0u64; cells]; cells]; priors.len()];

    for (i, (prior, conditional)) in priors.iter().zip(conditionals).enumerate() {
        for _ in 0..exploration_rounds {
            let u = prior.sample(&mut rng);
            let r = conditional.row(u).sample(&mut rng);
            let observed = grant.min(u);
            counts[i][r as usize][observed as usize] += 1;
        }
    }

    let samples: Vec<Vec<u64>> = counts
        .iter()
        .map(|by_r| by_r.iter().map(|c| c.iter().sum()).collect())
        .collect();
    let estimates = counts
        .iter()
        .map(|by_r| {
            by_r.iter()
                .map(|c| {
                    let weights: Vec<f64> = c.iter().map(|&k| k as f64).collect();
                    Pmf::from_weights(&weights).ok()
                })
                .collect()
        })
        .collect();

    Ok(NaiveLearning {
        max_demand,
        supply,
        estimates,
        samples,
        censored: supply < max_demand,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(s: impl ClientStrategy + 'static) -> Box<dyn ClientStrategy> {
        Box::new(s)
    }

    fn view(round: usize, max: u32, records: &[RoundRecord]) -> ClientView<'_> {
        ClientView {
            client: 0,
            round,
            max_demand: max,
            records,
        }
    }

    #[test]
    fn library_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(Truthful.request(&view(1, 4, &[]), 3, &mut rng), 3);
        assert_eq!(
            ConstantOverRequest(2).request(&view(1, 4, &[]), 3, &mut rng),
            4
        );

        let won = [RoundRecord {
            round: 1,
            client: 0,
            request: 1,
            allocated: 1,
            executed: 1,
        }];
        let mut cw = ConditionalWithdrawal;
        for t in 2..10 {
            assert_eq!(cw.request(&view(t, 1, &won), 1, &mut rng), 0);
        }
        let lost = [RoundRecord {
            allocated: 0,
            executed: 0,
            ..won[0]
        }];
        assert_eq!(cw.request(&view(2, 1, &lost), 1, &mut rng), 1);

        assert_eq!(FirstRoundZero.request(&view(1, 1, &[]), 1, &mut rng), 0);
        assert_eq!(FirstRoundZero.request(&view(2, 1, &lost), 1, &mut rng), 1);
    }

    #[test]
    fn zero_supply_gives_nothing() {
        let mut s = vec![boxed(Truthful), boxed(Truthful)];
        let priors = vec![Pmf::uniform(3); 2];
        let out = run_mechanism(
            &mut s,
            &priors,
            0,
            5,
            &AllocationRule::Greedy {
                ties: TieBreak::LowestIndex,
            },
            1,
        )
        .unwrap();
        assert_eq!(out.client_utilities, vec![0, 0]);
        assert_eq!(out.lender_utility, 0);
        assert_eq!(out.history.len(), 5);
    }

    #[test]
    fn out_of_range_request_is_a_protocol_error() {
        let mut s = vec![boxed(Truthful), boxed(FixedMap(vec![0, 5]))];
        let priors = vec![Pmf::point_mass(1, 1).unwrap(); 2];
        let err = run_mechanism(
            &mut s,
            &priors,
            1,
            3,
            &AllocationRule::Greedy {
                ties: TieBreak::LowestIndex,
            },
            1,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::Protocol {
                client: 1,
                round: 1,
                request: 5,
                max: 1
            }
        );
    }

    #[test]
    fn per_round_budget() {
        let e = per_round_epsilon(1.0, 100, 0.05).unwrap();
        let expected = 1.0 / (2.0 * (200.0 * 20f64.ln()).sqrt());
        assert!((e - expected).abs() < 1e-15);
        assert!(per_round_epsilon(1.0, 0, 0.05).is_err());
    }

    #[test]
    fn streams_are_distinct() {
        let a = stream_rng(5, Stream::Demands).next_u64();
        let b = stream_rng(5, Stream::Ties).next_u64();
        let c = stream_rng(5, Stream::Client(0)).next_u64();
        assert!(a != b && b != c && a != c);
    }

    #[test]
    fn exploration_requires_rounds() {
        let q = [Pmf::uniform(2)];
        let c = [ConditionalDistribution::truthful(2)];
        assert!(naive_learning_mechanism(&q, &c, 2, 0, 1).is_err());
        assert!(naive_learning_mechanism(&q, &c, 1, 10, 1).unwrap().censored);
        assert!(!naive_learning_mechanism(&q, &c, 2, 10, 1).unwrap().censored);
    }
}
