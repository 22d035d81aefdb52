//! Seeded, portable random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by a user
//! seed plus a [`Stream`] tag, so architecture edges, weight initialisation,
//! DropPath masks and data generation never share a sequence. Changing the
//! weight seed leaves the sampled DAG untouched and vice versa.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Disjoint sub-streams of one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ArchEdges = 1,
    WeightInit = 2,
    DropPath = 3,
    Data = 4,
    Shuffle = 5,
    Oracle = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator for the `index`-th child of `(seed, stream)`, e.g. one
/// MonteCarlo sample or one training step.
pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(1))));
    rng.set_stream(stream as u64);
    rng
}

/// Uniform draw in `[0, 1)`; `u < p` is the Bernoulli(p) convention used
/// throughout, so `p = 0` never fires and `p = 1` always does.
#[inline]
pub fn uniform01<R: Rng>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Standard normal via Box–Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1 = rng.gen::<f64>();
        if u1 > 0.0 {
            let u2 = rng.gen::<f64>();
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}
