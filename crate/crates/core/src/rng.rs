//! Counter-based random streams.
//!
//! Trial `i` of an experiment seeded with `seed` always draws from the ChaCha8
//! stream `(seed, i)`, so results do not depend on how trials are scheduled
//! across threads. Parallel maps collect in trial order and every reduction is
//! performed serially on the collected vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type TrialRng = ChaCha8Rng;

/// Random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Evaluates `f(trial)` for every trial, in parallel, returning results in trial order.
pub fn par_map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}
