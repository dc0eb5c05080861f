//! Random instance generators.

use rand::Rng;
use seclend_core::{Pmf, Valuation};

/// A pmf over `0..=max_demand` with some entries zeroed out.
pub fn pmf<R: Rng>(rng: &mut R, max_demand: u32) -> Pmf {
    loop {
        let weights: Vec<f64> = (0..=max_demand)
            .map(|_| {
                if rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        if let Ok(p) = Pmf::from_weights(&weights) {
            return p;
        }
    }
}

/// Marginals drawn uniformly from `[0, 1)` and sorted in decreasing order.
pub fn dmr<R: Rng>(rng: &mut R, max_demand: u32) -> Valuation {
    let mut m: Vec<f64> = (0..max_demand).map(|_| rng.gen()).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    Valuation::new(m).expect("sorted values in [0, 1)")
}
