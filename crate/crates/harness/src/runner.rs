//! Trial seeding and parallel execution.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// The seed of trial `trial`: word 0 of stream `trial` of the master generator.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

pub fn trial_rng(master: u64, trial: usize) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(trial_seed(master, trial))
}

/// Runs `f(trial, seed)` for every trial on the rayon pool. Results come back
/// in trial order whatever order the trials finish in.
pub fn run_trials<T, E, F>(master: u64, trials: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize, u64) -> Result<T, E> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|k| f(k, trial_seed(master, k)))
        .collect()
}
