//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream keyed by
//! `(seed, domain)` and addressed by a 64-bit stream index. Work is split into
//! fixed blocks whose index selects the stream, so the numbers a block sees do
//! not depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent uses of a single user seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    BodySampling = 1,
    Gaussian = 2,
    Bootstrap = 3,
    Directions = 4,
    Candidates = 5,
    Sphere = 6,
    Check = 7,
    Refine = 8,
    PolytopeVolume = 9,
    Fallback = 10,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a tag into a new 64-bit seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// A family of streams sharing a key; `stream(i)` is a pure function of
/// `(seed, domain, i)`.
#[derive(Clone, Copy, Debug)]
pub struct Streams {
    key: u64,
}

impl Streams {
    pub fn new(seed: u64, domain: Domain) -> Self {
        Streams {
            key: derive_seed(seed, domain as u64),
        }
    }

    pub fn stream(&self, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }
}
