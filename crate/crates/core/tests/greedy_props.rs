use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use seclend_core::greedy::{brute_force_optimal, greedy_allocate, greedy_random_ties};
use seclend_core::model::{lender_welfare, tail_probabilities};
use seclend_core::{Pmf, Valuation};

fn pmf(max_demand: u32) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.0f64..1.0, max_demand as usize + 1)
        .prop_filter_map("needs positive mass", |w| Pmf::from_weights(&w).ok())
}

fn instance() -> impl Strategy<Value = (Vec<Pmf>, u32)> {
    (1u32..=4, 1usize..=3, 0u32..=5)
        .prop_flat_map(|(u, n, v)| (prop::collection::vec(pmf(u), n), Just(v)))
}

proptest! {
    #[test]
    fn greedy_welfare_is_optimal((posteriors, supply) in instance()) {
        let greedy = lender_welfare(&greedy_allocate(&posteriors, supply), &posteriors).unwrap();
        let (_, best) = brute_force_optimal(&posteriors, supply).unwrap();
        prop_assert!((greedy - best).abs() <= 1e-9, "greedy {greedy} vs optimum {best}");
    }

    #[test]
    fn random_tie_breaking_keeps_welfare((posteriors, supply) in instance(), seed in any::<u64>()) {
        let vals: Vec<Valuation> = posteriors.iter().map(tail_probabilities).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let alloc = greedy_random_ties(&vals, supply, &mut rng);
        prop_assert!(alloc.is_feasible());
        let w = lender_welfare(&alloc, &posteriors).unwrap();
        let (_, best) = brute_force_optimal(&posteriors, supply).unwrap();
        prop_assert!((w - best).abs() <= 1e-9);
    }

    #[test]
    fn greedy_never_exceeds_supply_or_demand((posteriors, supply) in instance()) {
        let alloc = greedy_allocate(&posteriors, supply);
        prop_assert!(alloc.total() <= u64::from(supply));
        for (s, q) in alloc.shares().iter().zip(&posteriors) {
            prop_assert!(*s <= q.max_demand());
        }
    }
}
