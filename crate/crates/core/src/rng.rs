//! Named, counter-based random substreams.
//!
//! Every consumer of randomness derives its generator from the user seed, a
//! label naming the purpose and an index (for example the predictor column in a
//! scan). Results therefore do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub mod label {
    pub const BOOTSTRAP: u64 = 0xB007;
    pub const PERMUTATION: u64 = 0x9E12;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, label: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(label)));
    rng.set_stream(index);
    rng
}
