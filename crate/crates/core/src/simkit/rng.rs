//! Counter-based substreams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose key is the run
//! seed and whose stream number is a hash of a purpose tag plus indices, so a
//! replication sees the same numbers under any parallel schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keeping unrelated draws apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Population = 1,
    OutlierOrder = 2,
    OutlierValues = 3,
    AuxiliaryNoise = 4,
    McReference = 5,
    StudySample = 6,
    BootstrapPopulation = 7,
    BootstrapResample = 8,
    BootstrapSeed = 9,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream number for a tag and index path.
pub fn stream_id(tag: Stream, ids: &[u64]) -> u64 {
    ids.iter()
        .fold(splitmix(tag as u64), |h, &id| splitmix(h ^ splitmix(id)))
}

/// A fresh generator for `(seed, tag, ids)`.
pub fn substream(seed: u64, tag: Stream, ids: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(tag, ids));
    rng
}

/// A derived 64-bit seed, for handing to a nested harness.
pub fn derive_seed(seed: u64, tag: Stream, ids: &[u64]) -> u64 {
    splitmix(seed ^ stream_id(tag, ids))
}
