//! Keyed, splittable randomness.
//!
//! Every random quantity of a replica is drawn from a ChaCha8 stream under the
//! replica's 256-bit key. The stream is selected by a packed 64-bit id
//! `(tag:4 | entity:28 | window:32)`, so any window of any entity's stream can
//! be regenerated on demand, in any order, by any process that shares the key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `[0, 1)` from a hashed coordinate tuple. Used where a lookup table
/// of i.i.d. variables indexed by lattice coordinates is needed without storage.
#[inline]
pub fn hashed_uniform(seed: u64, tag: u64, a: i64, b: u64) -> f64 {
    let mut h = splitmix64(seed ^ tag.wrapping_mul(GOLDEN));
    h = splitmix64(h ^ (a as u64));
    h = splitmix64(h ^ b.rotate_left(17));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Maximum entity index representable in a stream id.
pub const MAX_ENTITY: usize = (1 << 28) - 1;

#[inline]
pub fn stream_id(tag: u8, entity: usize, window: u32) -> u64 {
    debug_assert!(tag < 16 && entity <= MAX_ENTITY);
    ((tag as u64) << 60) | (((entity as u64) & MAX_ENTITY as u64) << 32) | window as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReplicaKey([u8; 32]);

impl ReplicaKey {
    pub fn new(master: u64) -> Self {
        Self::derive(master, &[])
    }

    /// Key for the node `path` below `master` in the seed tree. Distinct paths
    /// give unrelated keys; e.g. `derive(seed, &[evaluation, replica])`.
    pub fn derive(master: u64, path: &[u64]) -> Self {
        let mut state = splitmix64(master);
        for (depth, &component) in path.iter().enumerate() {
            state = splitmix64(state ^ splitmix64(component.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN))));
        }
        let mut bytes = [0u8; 32];
        for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(state.wrapping_add(i as u64)).to_le_bytes());
        }
        ReplicaKey(bytes)
    }

    pub fn child(&self, component: u64) -> Self {
        let mut acc = 0u64;
        for chunk in self.0.chunks_exact(8) {
            acc = splitmix64(acc ^ u64::from_le_bytes(chunk.try_into().unwrap()));
        }
        Self::derive(acc, &[component])
    }

    /// A 64-bit digest of the key, for hashed lookups.
    pub fn digest(&self) -> u64 {
        self.0
            .chunks_exact(8)
            .fold(0u64, |acc, c| splitmix64(acc ^ u64::from_le_bytes(c.try_into().unwrap())))
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(stream);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let key = ReplicaKey::derive(7, &[1, 2]);
        let a: Vec<u64> = (0..4).map(|_| 0).scan(key.rng(stream_id(3, 10, 0)), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(key.rng(stream_id(3, 10, 0)), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(key.rng(stream_id(3, 10, 1)), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(ReplicaKey::derive(7, &[1, 2]), ReplicaKey::derive(7, &[2, 1]));
    }

    #[test]
    fn stream_id_packs_without_overlap() {
        assert_ne!(stream_id(0, 1, 0), stream_id(0, 0, 1));
        assert_ne!(stream_id(1, 0, 0), stream_id(0, MAX_ENTITY, u32::MAX));
    }

    #[test]
    fn hashed_uniform_is_roughly_uniform() {
        let n = 100_000;
        let mean: f64 = (0..n).map(|i| hashed_uniform(3, 1, i as i64 - 500, 9)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }
}
