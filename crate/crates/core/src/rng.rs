//! Seed derivation.
//!
//! Every random draw in the toolkit comes from a ChaCha12 stream whose seed is
//! derived from a master seed, an operation tag and a list of indices
//! (subsample number, trial number, ...). Streams therefore do not depend on
//! the order in which parallel tasks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Identifier of the generator and derivation scheme, recorded in manifests.
pub const RNG_SCHEME: &str = "chacha12+splitmix64/v1";

pub type StreamRng = ChaCha12Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives a 64-bit seed from `(master, tag, path)`.
pub fn derive_seed(master: u64, tag: &str, path: &[u64]) -> u64 {
    let mut s = splitmix64(master ^ fnv1a(tag));
    for &p in path {
        s = splitmix64(s ^ splitmix64(p));
    }
    s
}

/// Opens the random stream for `(master, tag, path)`.
pub fn stream(master: u64, tag: &str, path: &[u64]) -> StreamRng {
    let mut s = derive_seed(master, tag, path);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
