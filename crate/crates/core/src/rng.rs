//! Counter-based seeding: every random stream is a pure function of
//! `(seed, stream, row)`, so banks and models do not depend on the order in
//! which they are generated or on the platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64, row: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&row.to_le_bytes());
    key[24..].copy_from_slice(b"scnbloom");
    ChaCha8Rng::from_seed(key)
}
