//! Ascending-price auction for `V` identical shares among bidders with
//! diminishing marginal returns.
//!
//! Clients are visited in index order. A client bids for one more share when
//! its next marginal value is at least the current price. Every bid takes the
//! next slot of a ring of `V` share slots, dispossessing whoever held that slot,
//! and the price rises by `alpha` after every `V` bids. The auction stops after
//! a full pass with no bids. The price is only a coordination device; nobody
//! is charged.

use crate::error::{Error, Result};
use crate::model::{Allocation, Valuation, TOLERANCE};

/// Bid rule shared with the private auction: bid when the next marginal is
/// at least the price, except that a zero marginal never bids at price zero.
pub fn wants_share(marginal: f64, price: f64) -> bool {
    marginal >= price && marginal > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidEvent {
    pub round: usize,
    pub client: usize,
    pub price: f64,
    /// Shares the client held when it placed the bid.
    pub held_before: u32,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub allocation: Allocation,
    pub final_price: f64,
    /// Full passes over the clients, including the final pass with no bids.
    pub rounds: usize,
    pub total_bids: u64,
    /// Empty unless the auction was run with tracing.
    pub trace: Vec<BidEvent>,
}

/// Mutable auction bookkeeping.
#[derive(Debug, Clone)]
pub struct AuctionState {
    holdings: Vec<u32>,
    slots: Vec<Option<usize>>,
    next_slot: usize,
    price_steps: u64,
    alpha: f64,
    total_bids: u64,
    round_bids: u64,
}

impl AuctionState {
    pub fn new(clients: usize, supply: u32, alpha: f64) -> Self {
        AuctionState {
            holdings: vec![0; clients],
            slots: vec![None; supply as usize],
            next_slot: 0,
            price_steps: 0,
            alpha,
            total_bids: 0,
            round_bids: 0,
        }
    }

    /// `alpha * floor(T_B / V)`.
    pub fn price(&self) -> f64 {
        self.alpha * self.price_steps as f64
    }

    pub fn holdings(&self) -> &[u32] {
        &self.holdings
    }

    pub fn total_bids(&self) -> u64 {
        self.total_bids
    }

    pub fn round_bids(&self) -> u64 {
        self.round_bids
    }

    pub fn held_total(&self) -> u64 {
        self.holdings.iter().map(|&s| u64::from(s)).sum()
    }

    fn start_round(&mut self) {
        self.round_bids = 0;
    }

    /// Awards the next slot to `client` and returns the slot index.
    fn bid(&mut self, client: usize) -> usize {
        let slot = self.next_slot;
        self.next_slot = (slot + 1) % self.slots.len();
        if let Some(previous) = self.slots[slot].replace(client) {
            self.holdings[previous] -= 1;
        }
        self.holdings[client] += 1;
        self.round_bids += 1;
        self.total_bids += 1;
        if self.total_bids.is_multiple_of(self.slots.len() as u64) {
            self.price_steps += 1;
        }
        slot
    }
}

pub fn run_auction(valuations: &[Valuation], supply: u32, alpha: f64) -> Result<AuctionOutcome> {
    auction(valuations, supply, alpha, false)
}

/// Like [`run_auction`] but records every bid.
pub fn run_auction_traced(
    valuations: &[Valuation],
    supply: u32,
    alpha: f64,
) -> Result<AuctionOutcome> {
    auction(valuations, supply, alpha, true)
}

fn auction(
    valuations: &[Valuation],
    supply: u32,
    alpha: f64,
    record: bool,
) -> Result<AuctionOutcome> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    let n = valuations.len();
    if supply == 0 {
        return Ok(AuctionOutcome {
            allocation: Allocation::zeros(n, 0),
            final_price: 0.0,
            rounds: 0,
            total_bids: 0,
            trace: Vec::new(),
        });
    }

    let mut state = AuctionState::new(n, supply, alpha);
    let mut trace = Vec::new();
    let mut rounds = 0;
    loop {
        rounds += 1;
        state.start_round();
        for (client, v) in valuations.iter().enumerate() {
            let held = state.holdings[client];
            let Some(marginal) = v.marginal(held + 1) else {
                continue;
            };
            let price = state.price();
            if !wants_share(marginal, price) {
                continue;
            }
            let slot = state.bid(client);
            if record {
                trace.push(BidEvent {
                    round: rounds,
                    client,
                    price,
                    held_before: held,
                    slot,
                });
            }
        }
        if state.round_bids == 0 {
            break;
        }
    }

    Ok(AuctionOutcome {
        allocation: Allocation::new(state.holdings.clone(), supply)?,
        final_price: state.price(),
        rounds,
        total_bids: state.total_bids,
        trace,
    })
}

/// Whether every client holds an `alpha`-approximately most preferred bundle
/// at `price`: `v(S) - p S >= max_l (v(l) - l p) - S alpha`.
pub fn walrasian_check(
    valuations: &[Valuation],
    allocation: &Allocation,
    price: f64,
    alpha: f64,
) -> bool {
    valuations.iter().zip(allocation.shares()).all(|(v, &s)| {
        let surplus = |l: u32| v.value(l) - f64::from(l) * price;
        let best = (0..=v.max_units())
            .map(surplus)
            .fold(f64::NEG_INFINITY, f64::max);
        surplus(s) >= best - f64::from(s) * alpha - TOLERANCE
    })
}
