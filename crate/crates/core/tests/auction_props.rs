use proptest::prelude::*;
use seclend_core::auction::{run_auction, run_auction_traced, walrasian_check};
use seclend_core::greedy::brute_force_by_value;
use seclend_core::Valuation;

/// Diminishing marginals strictly below 1.
fn dmr(max_demand: usize) -> impl Strategy<Value = Valuation> {
    prop::collection::vec(0.0f64..1.0, max_demand).prop_map(|mut m| {
        m.sort_by(|a, b| b.total_cmp(a));
        Valuation::new(m).unwrap()
    })
}

fn instance() -> impl Strategy<Value = (Vec<Valuation>, u32, f64)> {
    (1usize..=4, 1usize..=5, 1u32..=8, 0.02f64..0.5)
        .prop_flat_map(|(u, n, v, a)| (prop::collection::vec(dmr(u), n), Just(v), Just(a)))
}

proptest! {
    #[test]
    fn auction_bounds((vals, supply, alpha) in instance()) {
        let out = run_auction(&vals, supply, alpha).unwrap();
        let n = vals.len() as f64;
        let v = f64::from(supply);
        prop_assert!(out.allocation.is_feasible());
        // V/alpha + 1 is not enough when 1/alpha is not an integer; see below.
        prop_assert!(out.rounds as f64 <= v * ((1.0 / alpha).floor() + 1.0) + 1.0);
        let welfare: f64 = vals.iter().zip(out.allocation.shares()).map(|(x, &s)| x.value(s)).sum();
        let (_, opt) = brute_force_by_value(&vals, supply).unwrap();
        prop_assert!(welfare / n >= opt / n - alpha * v / n - 1e-9);
        prop_assert!(walrasian_check(&vals, &out.allocation, out.final_price, alpha));
    }

    #[test]
    fn every_bid_is_wanted_at_its_price((vals, supply, alpha) in instance()) {
        let out = run_auction_traced(&vals, supply, alpha).unwrap();
        prop_assert_eq!(out.trace.len() as u64, out.total_bids);
        for bid in &out.trace {
            let m = vals[bid.client].marginal(bid.held_before + 1).unwrap();
            prop_assert!(m >= bid.price && m > 0.0);
            prop_assert!(bid.slot < supply as usize);
        }
        let prices: Vec<f64> = out.trace.iter().map(|b| b.price).collect();
        prop_assert!(prices.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn round_bound_without_integer_price_levels() {
    // Price levels 0, 0.41, 0.82 all sit below the first marginal, so a lone
    // bidder outbids itself three times and the fourth pass is empty: four
    // passes against V/alpha + 1 = 3.44.
    let vals = [Valuation::new(vec![0.92, 0.85]).unwrap()];
    let out = run_auction(&vals, 1, 0.41).unwrap();
    assert_eq!(out.rounds, 4);
    assert!(out.rounds as f64 > 1.0 / 0.41 + 1.0);
    assert!(out.rounds as f64 <= (1.0f64 / 0.41).floor() + 2.0);
}
