//! Seeding and counter-based random draws.
//!
//! Every episode owns a ChaCha stream derived from `(seed, episode index)`, so
//! results do not depend on how episodes are spread over workers. Inside an
//! episode each slot draws a single 64-bit key; ALOHA roles and fading gains
//! are then pure functions of `(slot key, node)` and `(slot key, tx, rx)`.
//! Evaluating the same slot for several operating points therefore sees the
//! same roles and the same fading (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const ROLE_DOMAIN: u64 = 0x2545_f491_4f6c_dd1d;
const FADING_DOMAIN: u64 = 0xd6e8_feb8_6659_fd93;

/// Random stream for episode `index` of a run seeded with `seed`.
pub fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The `counter`-th SplitMix64 output of the stream keyed by `seed`.
#[inline]
pub fn splitmix_at(seed: u64, counter: u64) -> u64 {
    mix64(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Uniform in `[0, 1)` from the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unit-mean exponential by inversion.
#[inline]
pub fn exp1_from_bits(bits: u64) -> f64 {
    -libm::log(1.0 - unit_f64(bits))
}

/// Per-slot uniform used for the ALOHA decision of `node`.
#[inline]
pub fn role_uniform(slot_key: u64, node: usize) -> f64 {
    unit_f64(splitmix_at(mix64(slot_key ^ ROLE_DOMAIN), node as u64))
}

/// Rayleigh power gains `|h|^2` of one slot, addressed by (transmitter,
/// receiver key). Gains are drawn lazily and are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FadingField {
    key: u64,
}

impl FadingField {
    pub fn new(slot_key: u64) -> Self {
        Self {
            key: mix64(slot_key ^ FADING_DOMAIN),
        }
    }

    /// Seed shared by all links ending at `rx_key`.
    #[inline]
    pub fn receiver_seed(&self, rx_key: u64) -> u64 {
        mix64(splitmix_at(self.key, rx_key))
    }

    #[inline]
    pub fn gain_at(receiver_seed: u64, tx: usize) -> f64 {
        exp1_from_bits(splitmix_at(receiver_seed, tx as u64))
    }

    pub fn gain(&self, tx: usize, rx_key: u64) -> f64 {
        Self::gain_at(self.receiver_seed(rx_key), tx)
    }
}
