//! Named, reproducible random streams.
//!
//! Every random draw in the pipeline comes from a stream identified by a
//! `(purpose, layer)` pair derived from one experiment seed. Streams are
//! ChaCha8 generators keyed by a SplitMix64 mix of the three values, so the
//! sequence is identical across runs and platforms and drawing more from one
//! stream never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    WeightInit,
    ThresholdInit,
    PatchSampling,
    Shuffle,
    Svm,
    Synthetic,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::WeightInit => 0x5745_4947,
            Purpose::ThresholdInit => 0x5448_5245,
            Purpose::PatchSampling => 0x5041_5443,
            Purpose::Shuffle => 0x5348_5546,
            Purpose::Svm => 0x5356_4d00,
            Purpose::Synthetic => 0x5359_4e54,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub purpose: Purpose,
    pub layer: usize,
}

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a base seed with an arbitrary salt; used to derive per-member
/// seeds for ensembles.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ salt.rotate_left(17))
}

pub fn stream(seed: u64, purpose: Purpose, layer: usize) -> StreamRng {
    let id = StreamId { purpose, layer };
    stream_for(seed, id)
}

pub fn stream_for(seed: u64, id: StreamId) -> StreamRng {
    let a = splitmix64(seed);
    let b = splitmix64(a ^ id.purpose.tag());
    let c = splitmix64(b ^ (id.layer as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(c.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
