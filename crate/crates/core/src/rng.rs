//! Counter-based random stream derivation.
//!
//! Every random quantity of a drop comes from a stream keyed by
//! `(master_seed, sweep_point_id, drop_index, substream)`. Sequential streams
//! (positions, shadowing, scheduling, lattice offsets) are ChaCha8 generators
//! seeded from that key. Per-link draws (LoS states, multi-path fading) come
//! from [`PairStream`], a counter-based generator indexed by the link, so a
//! link realizes identically no matter when or whether its neighbours are
//! evaluated. That property is what lets association prune far-away BSs
//! without changing any result.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random substreams of a drop. Distinct tags yield independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Substream {
    BsPositions,
    UePositions,
    LosDraws,
    Shadow,
    Fading,
    Scheduling,
    HexOffset,
}

impl Substream {
    fn tag(self) -> u64 {
        match self {
            Substream::BsPositions => 0x6273_706f_7300_0001,
            Substream::UePositions => 0x7565_706f_7300_0002,
            Substream::LosDraws => 0x6c6f_7300_0000_0003,
            Substream::Shadow => 0x7368_6164_0000_0004,
            Substream::Fading => 0x6661_6465_0000_0005,
            Substream::Scheduling => 0x7363_6865_6400_0006,
            Substream::HexOffset => 0x6865_786f_6666_0007,
        }
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function (Steele, Lea, Flood).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN_GAMMA) ^ mix64(word))
}

/// Maps 64 random bits to a double uniform on the open interval (0, 1).
///
/// Uses the top 52 bits so both endpoints stay representable: the smallest
/// value is 2^-53 and the largest 1 - 2^-53. `u < p` is therefore never true
/// for `p <= 2^-53`.
#[inline]
pub fn open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Probability below which a Bernoulli draw through [`open01`] can never
/// succeed.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1.0 / (1u64 << 53) as f64;

/// Key of one drop within one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropKey {
    pub master_seed: u64,
    pub point_id: u64,
    pub drop_index: u64,
}

impl DropKey {
    pub fn new(master_seed: u64, point_id: u64, drop_index: u64) -> Self {
        DropKey {
            master_seed,
            point_id,
            drop_index,
        }
    }

    fn base(&self, tag: Substream) -> u64 {
        let h = absorb(mix64(self.master_seed), self.point_id);
        let h = absorb(h, self.drop_index);
        absorb(h, tag.tag())
    }

    /// Sequential stream for `tag`.
    pub fn stream(&self, tag: Substream) -> ChaCha8Rng {
        seeded_chacha(self.base(tag))
    }

    /// Sequential stream for `tag`, further split by `index`.
    pub fn indexed_stream(&self, tag: Substream, index: u64) -> ChaCha8Rng {
        seeded_chacha(absorb(self.base(tag), index))
    }

    /// Counter-based stream addressed by an ordered pair, e.g. (BS, UE).
    pub fn pair_stream(&self, tag: Substream, first: u64, second: u64) -> PairStream {
        let key = absorb(absorb(self.base(tag), first), second);
        PairStream { key, counter: 0 }
    }
}

fn seeded_chacha(word: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut state = word;
    for chunk in seed.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Counter-mode generator: output `i` is a pure function of `(key, i)`.
#[derive(Debug, Clone)]
pub struct PairStream {
    key: u64,
    counter: u64,
}

impl PairStream {
    /// Uniform on (0, 1); see [`open01`].
    #[inline]
    pub fn uniform_open01(&mut self) -> f64 {
        open01(self.next_u64())
    }
}

impl RngCore for PairStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
