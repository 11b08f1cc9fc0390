//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, domain)` and selected by an index (row, replica, start, ...), so
//! results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags that keep unrelated draws from sharing a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Generate = 0x6765_6e65,
    Corrupt = 0x636f_7272,
    Split = 0x7370_6c69,
    Start = 0x7374_6172,
    Replica = 0x7265_706c,
    Population = 0x706f_7075,
}

/// Stream `index` of the generator keyed by `(seed, domain)`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derive a child seed, e.g. one dataset seed per (cell, replica).
pub fn derive_seed(seed: u64, domain: Domain, a: u64, b: u64) -> u64 {
    use rand::RngCore;
    let mut rng = stream(seed, domain, a);
    rng.set_word_pos(u128::from(b) * 2);
    rng.next_u64()
}
