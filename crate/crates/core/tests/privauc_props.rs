use proptest::prelude::*;
use seclend_core::auction::wants_share;
use seclend_core::privauc::{
    first_admissible_epsilon, run_privauc, run_privauc_diagnostic, Billboard, BillboardClient,
    NoiseMode, PrivAucConfig, PrivAucParams,
};
use seclend_core::Valuation;

fn config() -> PrivAucConfig {
    let params = PrivAucParams {
        alpha: 0.05,
        max_demand: 4,
        supply: 40,
        epsilon: 1.0,
        rho: 0.25,
        beta: 0.05,
    };
    first_admissible_epsilon(params, 400, (0..=40).map(|k| 2f64.powi(k))).unwrap()
}

fn valuations(n: usize) -> impl Strategy<Value = Vec<Valuation>> {
    prop::collection::vec(
        prop::collection::vec(0.0f64..1.0, 4).prop_map(|mut m| {
            m.sort_by(|a, b| b.total_cmp(a));
            Valuation::new(m).unwrap()
        }),
        n,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn allocation_is_always_feasible(vals in valuations(400), seed in any::<u64>()) {
        let out = run_privauc(&vals, &config(), seed).unwrap();
        prop_assert!(out.allocation.total() <= 40);
        prop_assert!(out.rounds <= config().rounds());
    }

    #[test]
    fn bids_respect_the_cap(vals in valuations(400), seed in any::<u64>()) {
        let cfg = config();
        let out = run_privauc(&vals, &cfg, seed).unwrap();
        let cap = cfg.bid_cap().unwrap();
        prop_assert!(out.bids_per_client.iter().all(|&b| b <= cap));
        prop_assert_eq!(out.bids_per_client.iter().sum::<u64>(), out.total_bids);
    }

    #[test]
    fn held_shares_are_not_stale(vals in valuations(400), seed in any::<u64>()) {
        let out = run_privauc(&vals, &config(), seed).unwrap();
        if out.counter_max_error <= config().error() {
            for a in &out.held {
                prop_assert!(a.price >= out.final_price - 2.0 * 0.05 - 1e-9);
            }
        }
    }

    /// Each client's shares can be recomputed from its own valuation and the
    /// published counts alone.
    #[test]
    fn clients_depend_only_on_the_billboard(vals in valuations(400), seed in any::<u64>()) {
        let cfg = config();
        let out = run_privauc_diagnostic(&vals, &cfg, seed).unwrap();
        let counts: Vec<f64> = out.transcript.iter().map(|r| r.noisy_count).collect();
        let n = vals.len();
        for (i, v) in vals.iter().enumerate() {
            let mut client = BillboardClient::new(v.clone(), &cfg);
            for row in out.transcript.iter().filter(|r| r.client == i) {
                let board = Billboard::new(&counts[..row.t - 1]);
                prop_assert_eq!(client.turn(&board, row.t), row.bit);
            }
            client.settle(&Billboard::new(&counts));
            prop_assert_eq!(client.shares(), out.allocation.shares()[i]);
            prop_assert!(out.transcript.iter().filter(|r| r.client == i).all(|r| r.t % n == (i + 1) % n));
        }
    }

    /// Without noise the published count is the true bid count, so every
    /// price on the transcript follows from the bits before it.
    #[test]
    fn noiseless_prices_follow_the_bits(vals in valuations(400)) {
        let cfg = config().with_noise(NoiseMode::Disabled);
        let out = run_privauc_diagnostic(&vals, &cfg, 0).unwrap();
        prop_assert_eq!(out.counter_max_error, 0.0);
        let mut bids = 0u64;
        for row in &out.transcript {
            let expected = 0.05 * (bids as f64 / cfg.effective_supply()).floor();
            prop_assert!((row.price - expected).abs() < 1e-12);
            bids += u64::from(row.bit);
            prop_assert_eq!(row.noisy_count, bids as f64);
        }
    }
}

#[test]
fn bits_are_wanted_shares() {
    let cfg = config();
    let vals: Vec<Valuation> = (0..400)
        .map(|i| Valuation::new(vec![1.0 - (i % 20) as f64 / 20.0; 2]).unwrap())
        .collect();
    let out = run_privauc_diagnostic(&vals, &cfg, 7).unwrap();
    for row in out.transcript.iter().filter(|r| r.bit) {
        // The first marginal bounds every later one.
        let first = vals[row.client].marginal(1).unwrap();
        assert!(wants_share(first, row.price));
    }
}

#[test]
fn inadmissible_parameters_are_rejected() {
    let params = PrivAucParams {
        alpha: 0.05,
        max_demand: 4,
        supply: 40,
        epsilon: 1.0,
        rho: 0.25,
        beta: 0.05,
    };
    let err = PrivAucConfig::new(params, 400).unwrap_err();
    assert!(err.to_string().contains("E / V"), "{err}");
    let cfg = PrivAucConfig::unchecked(params, 400).unwrap();
    assert!(run_privauc(&vec![Valuation::point_mass(1, 4); 400], &cfg, 0).is_err());
}
