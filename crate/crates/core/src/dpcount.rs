//! Differentially private continual counting with the binary mechanism.
//!
//! Step `t` closes the dyadic segment ending at `t` whose length is the lowest
//! set bit of `t`; that segment's exact sum gets fresh Laplace noise. The
//! released count at `t` is the sum of the noisy segments named by the set
//! bits of `t`. Each input bit lands in at most `L = floor(log2 T) + 1`
//! segments, so noise of scale `L / epsilon` per segment makes the whole
//! stream `epsilon`-DP with respect to one bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Inverse-cdf Laplace draw with mean 0 and the given scale.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        // u = -0.5 would give ln(0).
        if u > -0.5 {
            return -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        }
    }
}

/// `2 sqrt(2) ln(1/beta) ln(T)^{5/2} / epsilon`: with probability at least
/// `1 - beta`, every released count is within this distance of the truth.
pub fn usefulness_bound(horizon: usize, epsilon: f64, beta: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(
            "beta",
            format!("must lie in (0, 1), got {beta}"),
        ));
    }
    if horizon < 2 {
        return Err(Error::domain(
            "horizon",
            format!("must be at least 2, got {horizon}"),
        ));
    }
    let log_t = (horizon as f64).ln();
    Ok(2.0 * std::f64::consts::SQRT_2 * (1.0 / beta).ln() * log_t.powf(2.5) / epsilon)
}

/// Per-contributor limit on 1-bits, `ceil((V/alpha + E) / (rho n - 4E))`.
pub fn bid_cap(supply: f64, alpha: f64, error: f64, rho: f64, clients: usize) -> Result<u64> {
    let denom = rho * clients as f64 - 4.0 * error;
    if !(denom > 0.0) {
        return Err(Error::domain(
            "bid cap",
            format!("rho n - 4E = {denom} must be positive"),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain(
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    Ok(((supply / alpha + error) / denom).ceil() as u64)
}

/// One row of the non-private diagnostic trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterTraceRow {
    pub t: usize,
    pub true_sum: u64,
    pub noisy_sum: f64,
}

#[derive(Debug, Clone)]
pub struct PrivateCounter {
    horizon: usize,
    epsilon: f64,
    scale: f64,
    monotone: bool,
    exact_segments: Vec<u64>,
    noisy_segments: Vec<f64>,
    released: Vec<f64>,
    true_prefix: Vec<u64>,
    budgets: Vec<u64>,
    rng: ChaCha20Rng,
}

impl PrivateCounter {
    pub fn new(horizon: usize, epsilon: f64, seed: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::domain("horizon", "must be positive"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::domain(
                "epsilon",
                format!("must be positive, got {epsilon}"),
            ));
        }
        let levels = levels(horizon);
        Ok(PrivateCounter {
            horizon,
            epsilon,
            scale: levels as f64 / epsilon,
            monotone: false,
            exact_segments: vec![0; levels],
            noisy_segments: vec![0.0; levels],
            released: Vec::with_capacity(horizon),
            true_prefix: Vec::with_capacity(horizon),
            budgets: Vec::new(),
            rng: ChaCha20Rng::seed_from_u64(seed),
        })
    }

    /// A counter that releases exact prefix sums.
    pub fn noiseless(horizon: usize) -> Result<Self> {
        PrivateCounter::new(horizon, f64::INFINITY, 0)
    }

    /// Release the running maximum of the raw counts instead of the raw counts.
    pub fn with_monotone(mut self, on: bool) -> Self {
        self.monotone = on;
        self
    }

    /// Gives each of `contributors` a budget of `cap` 1-bits.
    pub fn register_contributors(&mut self, contributors: usize, cap: u64) {
        self.budgets = vec![cap; contributors];
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Laplace scale applied to each segment sum.
    pub fn noise_scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.released.len()
    }

    pub fn is_empty(&self) -> bool {
        self.released.is_empty()
    }

    /// Appends one bit and returns the released count for the new step.
    pub fn feed(&mut self, bit: bool) -> Result<f64> {
        let t = self.released.len() + 1;
        if t > self.horizon {
            return Err(Error::HorizonExceeded {
                horizon: self.horizon,
            });
        }

        let level = t.trailing_zeros() as usize;
        let merged: u64 = self.exact_segments[..level].iter().sum::<u64>() + u64::from(bit);
        for j in 0..level {
            self.exact_segments[j] = 0;
            self.noisy_segments[j] = 0.0;
        }
        self.exact_segments[level] = merged;
        self.noisy_segments[level] = merged as f64 + sample_laplace(&mut self.rng, self.scale);

        let raw: f64 = self.segments(t).map(|j| self.noisy_segments[j]).sum();
        let value = match (self.monotone, self.released.last()) {
            (true, Some(&prev)) => raw.max(prev),
            _ => raw,
        };

        let prev_true = self.true_prefix.last().copied().unwrap_or(0);
        self.true_prefix.push(prev_true + u64::from(bit));
        self.released.push(value);
        Ok(value)
    }

    /// Feeds a bit on behalf of `contributor`, charging its budget for a 1-bit.
    /// An over-budget 1-bit is rejected and nothing is fed.
    pub fn feed_as(&mut self, contributor: usize, bit: bool) -> Result<f64> {
        if bit && !self.budgets.is_empty() {
            self.cap_contributor(contributor)?;
        }
        self.feed(bit)
    }

    /// Charges one 1-bit to `contributor` and returns what remains.
    pub fn cap_contributor(&mut self, contributor: usize) -> Result<u64> {
        let registered = self.budgets.len();
        let budget = self.budgets.get_mut(contributor).ok_or(Error::OutOfRange {
            what: "contributor",
            value: contributor as u64,
            max: registered.saturating_sub(1) as u64,
        })?;
        if *budget == 0 {
            return Err(Error::BudgetExhausted { contributor });
        }
        *budget -= 1;
        Ok(*budget)
    }

    pub fn remaining_budget(&self, contributor: usize) -> Option<u64> {
        self.budgets.get(contributor).copied()
    }

    /// Released counts `C[1..=t]`.
    pub fn released(&self) -> &[f64] {
        &self.released
    }

    /// `C[t]`, with `C[0] = 0`.
    pub fn count_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.released[t - 1]
        }
    }

    /// Segment levels summed into the release at step `t`.
    pub fn segments(&self, t: usize) -> impl Iterator<Item = usize> {
        (0..usize::BITS as usize).filter(move |j| t >> j & 1 == 1)
    }

    /// Largest `|C[t] - s_b(t)|` so far. Reads the true counts, so this is a
    /// diagnostic and must not feed back into any allocation decision.
    pub fn max_error(&self) -> f64 {
        self.released
            .iter()
            .zip(&self.true_prefix)
            .map(|(c, &s)| (c - s as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Non-private diagnostic rows `(t, true sum, released sum)`.
    pub fn trace(&self) -> Vec<CounterTraceRow> {
        self.released
            .iter()
            .zip(&self.true_prefix)
            .enumerate()
            .map(|(k, (&noisy_sum, &true_sum))| CounterTraceRow {
                t: k + 1,
                true_sum,
                noisy_sum,
            })
            .collect()
    }
}

fn levels(horizon: usize) -> usize {
    (usize::BITS - horizon.leading_zeros()) as usize
}
