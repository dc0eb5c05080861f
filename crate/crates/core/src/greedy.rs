//! The lender's Bayesian-optimal one-shot rule and an exhaustive oracle.
//!
//! Greedy hands out shares one at a time, each to the client whose next
//! share has the highest marginal value. With posteriors the marginal value
//! of the `s`-th share is the tail probability `P[u >= s | r]`, so greedy
//! maximizes expected executed shares. The same loop is optimal for any
//! diminishing-returns valuation, which is how the private auction's
//! benchmark `OPT_V` is computed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{expected_usage, tail_probabilities, Allocation, Pmf, Valuation};

/// Enumeration cap for [`brute_force_optimal`].
pub const ORACLE_LIMIT: u128 = 10_000_000;

/// How equal marginal values are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    /// Uniform among exactly-tied clients.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pick {
    pub client: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    pub allocation: Allocation,
    /// The marginal value taken by each share, in allocation order.
    pub picks: Vec<Pick>,
}

/// Greedy over the posteriors' tail probabilities.
pub fn greedy_allocate(posteriors: &[Pmf], supply: u32) -> Allocation {
    let valuations: Vec<Valuation> = posteriors.iter().map(tail_probabilities).collect();
    greedy_by_value(&valuations, supply)
}

/// Greedy over arbitrary diminishing-returns valuations, lowest index wins ties.
pub fn greedy_by_value(valuations: &[Valuation], supply: u32) -> Allocation {
    run(valuations, supply, |tied| tied[0]).allocation
}

pub fn greedy_trace(valuations: &[Valuation], supply: u32) -> GreedyTrace {
    run(valuations, supply, |tied| tied[0])
}

/// Greedy with exact ties broken uniformly at random.
pub fn greedy_random_ties<R: Rng + ?Sized>(
    valuations: &[Valuation],
    supply: u32,
    rng: &mut R,
) -> Allocation {
    run(valuations, supply, |tied| {
        tied[rng.gen_range(0..tied.len())]
    })
    .allocation
}

pub fn greedy_with<R: Rng + ?Sized>(
    valuations: &[Valuation],
    supply: u32,
    ties: TieBreak,
    rng: &mut R,
) -> Allocation {
    match ties {
        TieBreak::LowestIndex => greedy_by_value(valuations, supply),
        TieBreak::Uniform => greedy_random_ties(valuations, supply, rng),
    }
}

fn run(
    valuations: &[Valuation],
    supply: u32,
    mut choose: impl FnMut(&[usize]) -> usize,
) -> GreedyTrace {
    let mut shares = vec![0u32; valuations.len()];
    let mut picks = Vec::with_capacity(supply as usize);
    let mut tied = Vec::with_capacity(valuations.len());

    for _ in 0..supply {
        let mut best = f64::NEG_INFINITY;
        tied.clear();
        for (i, v) in valuations.iter().enumerate() {
            // Clients already holding U shares are out of the running.
            let Some(next) = v.marginal(shares[i] + 1) else {
                continue;
            };
            if next > best {
                best = next;
                tied.clear();
                tied.push(i);
            } else if next == best {
                tied.push(i);
            }
        }
        if tied.is_empty() {
            break;
        }
        let winner = choose(&tied);
        shares[winner] += 1;
        picks.push(Pick {
            client: winner,
            value: best,
        });
    }

    GreedyTrace {
        allocation: Allocation::new(shares, supply).expect("one share per iteration"),
        picks,
    }
}

/// Number of vectors `s` with `0 <= s_i <= caps[i]` and `sum s_i <= supply`.
pub fn candidate_count(caps: &[u32], supply: u32) -> u128 {
    // ways[k] = number of prefixes summing to exactly k.
    let mut ways = vec![0u128; supply as usize + 1];
    ways[0] = 1;
    for &cap in caps {
        let mut next = vec![0u128; ways.len()];
        for (k, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for s in 0..=cap as usize {
                if k + s > supply as usize {
                    break;
                }
                next[k + s] = next[k + s].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |a, &w| a.saturating_add(w))
}

/// Exhaustive search over all feasible allocations, scoring each client with
/// the direct expectation `E[min(s, u)]`.
pub fn brute_force_optimal(posteriors: &[Pmf], supply: u32) -> Result<(Allocation, f64)> {
    let caps: Vec<u32> = posteriors.iter().map(Pmf::max_demand).collect();
    let table: Vec<Vec<f64>> = posteriors
        .iter()
        .map(|q| {
            (0..=q.max_demand())
                .map(|s| expected_usage(q, s).expect("s within support"))
                .collect()
        })
        .collect();
    search(&caps, supply, &table)
}

/// Exhaustive search maximizing `sum v_i(s_i)`.
pub fn brute_force_by_value(valuations: &[Valuation], supply: u32) -> Result<(Allocation, f64)> {
    let caps: Vec<u32> = valuations.iter().map(Valuation::max_units).collect();
    let table: Vec<Vec<f64>> = valuations
        .iter()
        .map(|v| (0..=v.max_units()).map(|s| v.value(s)).collect())
        .collect();
    search(&caps, supply, &table)
}

fn search(caps: &[u32], supply: u32, table: &[Vec<f64>]) -> Result<(Allocation, f64)> {
    let count = candidate_count(caps, supply);
    if count > ORACLE_LIMIT {
        return Err(Error::OracleLimit {
            count,
            limit: ORACLE_LIMIT,
        });
    }

    struct Search<'a> {
        caps: &'a [u32],
        table: &'a [Vec<f64>],
        current: Vec<u32>,
        best: Vec<u32>,
        best_value: f64,
    }

    impl Search<'_> {
        fn visit(&mut self, client: usize, remaining: u32, value: f64) {
            if client == self.caps.len() {
                if value > self.best_value {
                    self.best_value = value;
                    self.best.clone_from(&self.current);
                }
                return;
            }
            for s in 0..=self.caps[client].min(remaining) {
                self.current[client] = s;
                let v = value + self.table[client][s as usize];
                self.visit(client + 1, remaining - s, v);
            }
            self.current[client] = 0;
        }
    }

    let mut state = Search {
        caps,
        table,
        current: vec![0; caps.len()],
        best: vec![0; caps.len()],
        best_value: f64::NEG_INFINITY,
    };
    state.visit(0, supply, 0.0);
    let welfare = state.best_value.max(0.0);
    Ok((Allocation::new(state.best, supply)?, welfare))
}
