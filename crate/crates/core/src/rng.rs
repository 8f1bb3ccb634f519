//! Counter-based random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream whose key is
//! `(seed, domain)` and whose 64-bit stream id packs `(interval, snapshot,
//! element)`. A stream can be opened in any order on any thread and always
//! yields the same sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct domains never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Fading = 1,
    Noise = 2,
}

/// Identifies one snapshot of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub interval: u32,
    pub snapshot: u32,
}

pub const MAX_INTERVALS: u32 = u16::MAX as u32;
pub const MAX_ELEMENTS: usize = u16::MAX as usize;

impl StreamKey {
    pub fn new(seed: u64, interval: u32, snapshot: u32) -> Self {
        StreamKey {
            seed,
            interval,
            snapshot,
        }
    }

    /// Stream for one element (0-based) in one domain.
    pub fn stream(&self, domain: Domain, element: usize) -> ChaCha8Rng {
        debug_assert!(self.interval <= MAX_INTERVALS);
        debug_assert!(element <= MAX_ELEMENTS);
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        let id = (u64::from(self.interval) << 48)
            | (u64::from(self.snapshot) << 16)
            | (element as u64 & 0xffff);
        rng.set_stream(id);
        rng
    }
}
