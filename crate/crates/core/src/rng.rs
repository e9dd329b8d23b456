//! Seed discipline.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by
//! `(master seed, drop id, purpose)`. Streams never share state, so the
//! order in which drops or purposes are evaluated does not change any
//! individual draw.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Purpose tag of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Scenario = 1,
    BeamCovariance = 2,
    Channels = 3,
    Symbols = 4,
    Rcs = 5,
    Noise = 6,
    Oracle = 7,
    Solver = 8,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 64-bit seed of a named sub-stream.
pub fn derive_seed(master: u64, drop_id: u64, stream: Stream) -> u64 {
    let mut state = master;
    let a = splitmix64(&mut state);
    let mut state = a ^ drop_id.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let b = splitmix64(&mut state);
    let mut state = b ^ (stream as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7);
    splitmix64(&mut state)
}

/// Independent random stream for `(master, drop_id, stream)`.
pub fn stream_rng(master: u64, drop_id: u64, stream: Stream) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, drop_id, stream))
}
