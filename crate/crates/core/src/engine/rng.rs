//! Hierarchical random streams.
//!
//! Every random draw in a campaign comes from a stream keyed by
//! `(master_seed, generation, purpose)`, so changing how much one purpose
//! consumes (e.g. a larger proposal pool) leaves all other streams intact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    InitialSequences,
    TopUp,
    SurrogateFit,
    Elites,
    Proposals,
    AcquisitionSampling,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::InitialSequences => 1,
            Purpose::TopUp => 2,
            Purpose::SurrogateFit => 3,
            Purpose::Elites => 4,
            Purpose::Proposals => 5,
            Purpose::AcquisitionSampling => 6,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of one stream.
pub fn stream_seed(master_seed: u64, generation: u64, purpose: Purpose) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ generation.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ purpose.tag())
}

pub fn stream(master_seed: u64, generation: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, generation, purpose))
}
