//! Seed derivation for per-example random streams.
//!
//! Randomness that belongs to one example is drawn from a generator seeded by
//! `SHA-256(seed, stream, id)`, so results do not depend on dataset order or
//! on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn digest(seed: u64, stream: &str, id: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((stream.len() as u64).to_le_bytes());
    hasher.update(stream.as_bytes());
    hasher.update(id.as_bytes());
    let mut out = [0u8; 32];
    out.copy_from_slice(&hasher.finalize());
    out
}

pub fn derive_rng(seed: u64, stream: &str, id: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(seed, stream, id))
}

/// A 64-bit key, uniform over ids; used to pick exact-size random subsets.
pub fn derive_key(seed: u64, stream: &str, id: &str) -> u64 {
    let d = digest(seed, stream, id);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn rng(seed: u64, stream: &str) -> ChaCha8Rng {
    derive_rng(seed, stream, "")
}

/// Indices of a uniformly random subset of `round(fraction * ids.len())`
/// elements, sorted ascending. Membership depends only on `(seed, stream, id)`
/// and the subset size.
pub fn exact_subset<'a, I>(ids: I, fraction: f64, seed: u64, stream: &str) -> Vec<usize>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut keyed: Vec<(u64, &str, usize)> = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (derive_key(seed, stream, id), id, i))
        .collect();
    let take = (fraction * keyed.len() as f64).round() as usize;
    keyed.sort_unstable();
    let mut chosen: Vec<usize> = keyed.into_iter().take(take).map(|(_, _, i)| i).collect();
    chosen.sort_unstable();
    chosen
}
