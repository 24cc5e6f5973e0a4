//! Bernoulli-chain sampling of the cascade topology.
//!
//! A pump photon yields a complete m-photon coincidence iff every one of the
//! m−1 crystals along its down-conversion lineage splits, each independently
//! with probability p_s. Sampling that chain directly (instead of evolving
//! quantum states) is exactly the probabilistic model behind the closed-form
//! rates, and keeps Monte Carlo fast.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::CascadeSpec;
use crate::error::{Error, Result};

/// Pulses are processed in fixed-size shards with per-shard derived RNG
/// streams, so totals do not depend on worker count or completion order.
pub(crate) const SHARD_SIZE: u64 = 1 << 16;

/// Outcome counts of a stochastic cascade run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceCounts {
    /// Pump photons sampled.
    pub pumps: u64,
    /// Pump photons whose full chain of m−1 splittings succeeded.
    pub complete: u64,
    /// `failed_at[d]` counts photons that split on the first d crystals and
    /// then failed on crystal d+1 (d = 0 means no splitting at all).
    pub failed_at: Vec<u64>,
}

impl CoincidenceCounts {
    pub fn success_fraction(&self) -> f64 {
        if self.pumps == 0 {
            0.0
        } else {
            self.complete as f64 / self.pumps as f64
        }
    }
}

pub(crate) fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Sample `n_pump` independent pump photons through the m−1 crystal chain
/// of the cascade. Deterministic for a given seed; shard totals are summed
/// commutatively, so results are independent of scheduling.
pub fn simulate_stochastic(
    spec: &CascadeSpec,
    n_pump: u64,
    ps: f64,
    seed: u64,
) -> Result<CoincidenceCounts> {
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::InvalidQuery(format!(
            "splitting probability {ps} outside [0, 1]"
        )));
    }
    let chain_len = spec.crystals_required();
    let shards: u64 = n_pump.div_ceil(SHARD_SIZE);

    let (complete, failed_at) = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = shard_rng(seed, shard);
            let count = SHARD_SIZE.min(n_pump - shard * SHARD_SIZE);
            let mut complete = 0u64;
            let mut failed_at = vec![0u64; chain_len as usize];
            for _ in 0..count {
                match sample_chain(&mut rng, chain_len, ps) {
                    None => complete += 1,
                    Some(depth) => failed_at[depth as usize] += 1,
                }
            }
            (complete, failed_at)
        })
        .reduce(
            || (0u64, vec![0u64; chain_len as usize]),
            |(c1, f1), (c2, f2)| {
                let merged = f1.iter().zip(f2.iter()).map(|(a, b)| a + b).collect();
                (c1 + c2, merged)
            },
        );

    Ok(CoincidenceCounts {
        pumps: n_pump,
        complete,
        failed_at,
    })
}

/// Walk one photon through the chain; `None` means full success, otherwise
/// the number of successful splittings before the first failure.
pub(crate) fn sample_chain(rng: &mut impl Rng, chain_len: u32, ps: f64) -> Option<u32> {
    (0..chain_len).find(|_| !rng.gen_bool(ps))
}
