//! Domain types shared by every allocation rule.
//!
//! Share counts are integers in `0..=U` where `U` is the maximum demand.
//! Distributions over share counts are dense [`Pmf`]s, and a client's value
//! for a bundle is a [`Valuation`] stored as its marginal values.

use rand::Rng;

use crate::error::{Error, Result};

/// Absolute tolerance for probability bookkeeping.
pub const TOLERANCE: f64 = 1e-9;

/// A probability mass function over the share counts `0..=U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if let Some((u, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0 + TOLERANCE)
        {
            return Err(Error::InvalidPmf(format!("entry {u} = {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Pmf { probs })
    }

    /// Normalizes nonnegative weights into a pmf.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidPmf(format!("bad weights {weights:?}")));
        }
        Pmf::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn point_mass(at: u32, max_demand: u32) -> Result<Self> {
        if at > max_demand {
            return Err(Error::OutOfRange {
                what: "point mass",
                value: at.into(),
                max: max_demand.into(),
            });
        }
        let mut probs = vec![0.0; max_demand as usize + 1];
        probs[at as usize] = 1.0;
        Ok(Pmf { probs })
    }

    pub fn uniform(max_demand: u32) -> Self {
        let k = max_demand as usize + 1;
        Pmf {
            probs: vec![1.0 / k as f64; k],
        }
    }

    /// The support bound `U`.
    pub fn max_demand(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    pub fn prob(&self, u: u32) -> f64 {
        self.probs.get(u as usize).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-cdf draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        for (u, p) in self.probs.iter().enumerate() {
            acc += p;
            if x < acc {
                return u as u32;
            }
        }
        // Rounding left the cdf just short of 1; take the last supported value.
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0) as u32
    }

    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let k = self.probs.len().max(other.probs.len()) as u32;
        0.5 * (0..k)
            .map(|u| (self.prob(u) - other.prob(u)).abs())
            .sum::<f64>()
    }
}

/// Request distributions `Q(r | u)`, one row per true demand `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    rows: Vec<Pmf>,
}

impl ConditionalDistribution {
    pub fn new(rows: Vec<Pmf>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidPmf("conditional with no rows".into()));
        };
        let max = first.max_demand();
        if rows.len() != max as usize + 1 || rows.iter().any(|r| r.max_demand() != max) {
            return Err(Error::InvalidPmf(format!(
                "conditional needs {} rows over 0..={max}",
                max + 1
            )));
        }
        Ok(ConditionalDistribution { rows })
    }

    /// Every demand is reported as itself.
    pub fn truthful(max_demand: u32) -> Self {
        let rows = (0..=max_demand)
            .map(|u| Pmf::point_mass(u, max_demand).expect("u within support"))
            .collect();
        ConditionalDistribution { rows }
    }

    /// A deterministic report map `u -> map(u)`, clamped to `0..=U`.
    pub fn deterministic(max_demand: u32, map: impl Fn(u32) -> u32) -> Self {
        let rows = (0..=max_demand)
            .map(|u| Pmf::point_mass(map(u).min(max_demand), max_demand).expect("clamped"))
            .collect();
        ConditionalDistribution { rows }
    }

    pub fn max_demand(&self) -> u32 {
        self.rows[0].max_demand()
    }

    pub fn row(&self, u: u32) -> &Pmf {
        &self.rows[u as usize]
    }

    /// `Q(r | u)`.
    pub fn prob(&self, request: u32, demand: u32) -> f64 {
        self.rows
            .get(demand as usize)
            .map_or(0.0, |row| row.prob(request))
    }
}

/// Integer share counts per client together with the supply they were cut from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    shares: Vec<u32>,
    supply: u32,
}

impl Allocation {
    pub fn new(shares: Vec<u32>, supply: u32) -> Result<Self> {
        let allocated: u64 = shares.iter().map(|&s| u64::from(s)).sum();
        if allocated > u64::from(supply) {
            return Err(Error::Infeasible { allocated, supply });
        }
        Ok(Allocation { shares, supply })
    }

    /// Builds an allocation without the feasibility check, for reporting
    /// outcomes whose feasibility is itself under test.
    pub fn unchecked(shares: Vec<u32>, supply: u32) -> Self {
        Allocation { shares, supply }
    }

    pub fn zeros(clients: usize, supply: u32) -> Self {
        Allocation {
            shares: vec![0; clients],
            supply,
        }
    }

    pub fn shares(&self) -> &[u32] {
        &self.shares
    }

    pub fn supply(&self) -> u32 {
        self.supply
    }

    pub fn total(&self) -> u64 {
        self.shares.iter().map(|&s| u64::from(s)).sum()
    }

    pub fn is_feasible(&self) -> bool {
        self.total() <= u64::from(self.supply)
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }
}

/// A diminishing-marginal-returns valuation on `0..=U`, stored as the
/// marginals `v(j) - v(j-1)` for `j = 1..=U` with `v(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Valuation {
    marginals: Vec<f64>,
}

impl Valuation {
    pub fn new(marginals: Vec<f64>) -> Result<Self> {
        for (k, m) in marginals.iter().enumerate() {
            if !m.is_finite() || *m < 0.0 || *m > 1.0 {
                return Err(Error::InvalidValuation(format!(
                    "marginal {} = {m} outside [0, 1]",
                    k + 1
                )));
            }
        }
        if let Some(k) = marginals.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidValuation(format!(
                "marginal {} < marginal {} violates diminishing returns",
                k + 1,
                k + 2
            )));
        }
        Ok(Valuation { marginals })
    }

    /// Marginal value 1 for the first `units` shares and 0 after, over `0..=U`.
    pub fn point_mass(units: u32, max_demand: u32) -> Self {
        let marginals = (1..=max_demand)
            .map(|j| if j <= units { 1.0 } else { 0.0 })
            .collect();
        Valuation { marginals }
    }

    pub fn max_units(&self) -> u32 {
        self.marginals.len() as u32
    }

    /// The value of the `j`-th share (1-indexed); `None` past `U`.
    pub fn marginal(&self, j: u32) -> Option<f64> {
        if j == 0 {
            return None;
        }
        self.marginals.get(j as usize - 1).copied()
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    /// `v(s)` for `s` in `0..=U`; shares past `U` add nothing.
    pub fn value(&self, s: u32) -> f64 {
        self.marginals.iter().take(s as usize).sum()
    }
}

/// One client's outcome in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: usize,
    pub client: usize,
    pub request: u32,
    pub allocated: u32,
    /// `min(allocated, demand)`; capped by the true demand, not the request.
    pub executed: u32,
}

/// Tail probabilities `P[u >= j]` for `j = 1..=U`, viewed as marginal values.
pub fn tail_probabilities(posterior: &Pmf) -> Valuation {
    let probs = posterior.probs();
    let mut marginals = vec![0.0; probs.len() - 1];
    // Suffix sums accumulate nonnegative terms, so the tails come out
    // non-increasing even in floating point.
    let mut tail = 0.0;
    for j in (1..probs.len()).rev() {
        tail += probs[j];
        marginals[j - 1] = tail.min(1.0);
    }
    Valuation { marginals }
}

/// `E[min(s, u)]` for `u` drawn from the posterior.
pub fn expected_usage(posterior: &Pmf, s: u32) -> Result<f64> {
    let max = posterior.max_demand();
    if s > max {
        return Err(Error::OutOfRange {
            what: "shares",
            value: s.into(),
            max: max.into(),
        });
    }
    Ok(posterior
        .probs()
        .iter()
        .enumerate()
        .map(|(u, p)| p * f64::from(s.min(u as u32)))
        .sum())
}

/// Expected executed shares summed over clients.
pub fn lender_welfare(allocation: &Allocation, posteriors: &[Pmf]) -> Result<f64> {
    if allocation.len() != posteriors.len() {
        return Err(Error::LengthMismatch {
            left: allocation.len(),
            right: posteriors.len(),
        });
    }
    allocation
        .shares()
        .iter()
        .zip(posteriors)
        .map(|(&s, q)| expected_usage(q, s))
        .sum()
}

/// `Q(u | r)` by Bayes' rule from the prior over demand and the request model.
pub fn bayes_posterior(
    prior: &Pmf,
    conditional: &ConditionalDistribution,
    request: u32,
) -> Result<Pmf> {
    if prior.max_demand() != conditional.max_demand() {
        return Err(Error::InvalidPmf(format!(
            "prior over 0..={} but conditional over 0..={}",
            prior.max_demand(),
            conditional.max_demand()
        )));
    }
    let joint: Vec<f64> = (0..=prior.max_demand())
        .map(|u| conditional.prob(request, u) * prior.prob(u))
        .collect();
    let marginal: f64 = joint.iter().sum();
    if marginal <= 0.0 {
        return Err(Error::ImpossibleRequest { request });
    }
    Ok(Pmf {
        probs: joint.into_iter().map(|j| j / marginal).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= TOLERANCE
    }

    #[test]
    fn pmf_rejects_bad_mass() {
        assert!(Pmf::new(vec![0.5, 0.4]).is_err());
        assert!(Pmf::new(vec![1.2, -0.2]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![0.2, 0.3, 0.5]).is_ok());
    }

    #[test]
    fn point_mass_tails_are_an_indicator() {
        let tails = tail_probabilities(&Pmf::point_mass(3, 4).unwrap());
        assert_eq!(tails.marginals(), &[1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn tails_of_small_pmf() {
        let tails = tail_probabilities(&Pmf::new(vec![0.2, 0.3, 0.5]).unwrap());
        assert!(close(tails.marginals()[0], 0.8));
        assert!(close(tails.marginals()[1], 0.5));
    }

    #[test]
    fn zero_demand_has_zero_tails() {
        let tails = tail_probabilities(&Pmf::point_mass(0, 3).unwrap());
        assert!(tails.marginals().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn expected_usage_examples() {
        let q = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(close(expected_usage(&q, 2).unwrap(), 1.3));
        assert_eq!(expected_usage(&q, 0).unwrap(), 0.0);

        let narrow = Pmf::point_mass(3, 4).unwrap();
        assert!(matches!(
            expected_usage(&narrow, 5),
            Err(Error::OutOfRange { .. })
        ));
        let wide = Pmf::point_mass(3, 5).unwrap();
        assert_eq!(expected_usage(&wide, 5).unwrap(), 3.0);
    }

    #[test]
    fn lender_welfare_examples() {
        let pm = |u| Pmf::point_mass(u, 2).unwrap();
        let alloc = Allocation::new(vec![2, 1], 3).unwrap();
        assert_eq!(lender_welfare(&alloc, &[pm(2), pm(1)]).unwrap(), 3.0);
        assert_eq!(
            lender_welfare(&Allocation::zeros(2, 3), &[pm(2), pm(1)]).unwrap(),
            0.0
        );

        let qs = [
            Pmf::new(vec![0.2, 0.3, 0.5]).unwrap(),
            Pmf::new(vec![0.5, 0.5, 0.0]).unwrap(),
        ];
        let alloc = Allocation::new(vec![1, 1], 2).unwrap();
        assert!(close(lender_welfare(&alloc, &qs).unwrap(), 1.3));

        assert!(matches!(
            lender_welfare(&alloc, &qs[..1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn truthful_conditional_collapses_posterior() {
        let prior = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let q = ConditionalDistribution::truthful(3);
        for r in 0..=3 {
            let post = bayes_posterior(&prior, &q, r).unwrap();
            assert_eq!(post, Pmf::point_mass(r, 3).unwrap());
        }
    }

    #[test]
    fn uninformative_request_returns_prior() {
        let prior = Pmf::new(vec![0.0, 0.5, 0.5]).unwrap();
        let q = ConditionalDistribution::deterministic(2, |_| 2);
        let post = bayes_posterior(&prior, &q, 2).unwrap();
        assert!(post.total_variation(&prior) <= TOLERANCE);
    }

    #[test]
    fn bayes_direct_computation() {
        let prior = Pmf::new(vec![0.0, 0.5, 0.5]).unwrap();
        let q = ConditionalDistribution::new(vec![
            Pmf::new(vec![1.0, 0.0, 0.0]).unwrap(),
            Pmf::new(vec![0.0, 0.8, 0.2]).unwrap(),
            Pmf::new(vec![0.0, 0.2, 0.8]).unwrap(),
        ])
        .unwrap();
        let post = bayes_posterior(&prior, &q, 2).unwrap();
        assert!(close(post.prob(1), 0.2));
        assert!(close(post.prob(2), 0.8));
    }

    #[test]
    fn impossible_request_is_an_error() {
        let prior = Pmf::point_mass(1, 2).unwrap();
        let q = ConditionalDistribution::truthful(2);
        assert_eq!(
            bayes_posterior(&prior, &q, 2),
            Err(Error::ImpossibleRequest { request: 2 })
        );
    }

    #[test]
    fn valuation_rejects_increasing_marginals() {
        assert!(Valuation::new(vec![0.5, 0.6]).is_err());
        assert!(Valuation::new(vec![1.5]).is_err());
        let v = Valuation::new(vec![0.9, 0.5, 0.5]).unwrap();
        assert!(close(v.value(2), 1.4));
        assert_eq!(v.marginal(4), None);
        assert_eq!(v.value(10), v.value(3));
    }

    #[test]
    fn allocation_feasibility() {
        assert!(Allocation::new(vec![3, 2], 4).is_err());
        assert!(Allocation::new(vec![2, 2], 4).unwrap().is_feasible());
        assert!(!Allocation::unchecked(vec![3, 2], 4).is_feasible());
    }
}
