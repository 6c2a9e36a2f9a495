//! Seed derivation.
//!
//! Every random draw in an audit comes from a ChaCha stream keyed by the
//! master seed. Streams are addressed by a 64-bit stream id built from a
//! domain tag and, for retraining samples, the (phase, arm, index) triple.
//! The id layout is injective, so distinct purposes never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::types::{Arm, Phase};

pub type AuditRng = ChaCha12Rng;

const INDEX_BITS: u32 = 58;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Sample { phase: Phase, arm: Arm, index: u64 },
    Attack,
    Posterior,
    Coverage,
    Data,
    Other(u64),
}

impl Stream {
    /// Layout: bits 63..60 domain, 59 phase, 58 arm, 57..0 index.
    pub fn id(self) -> u64 {
        match self {
            Stream::Sample { phase, arm, index } => {
                assert!(index <= INDEX_MASK, "sample index out of range");
                let p = matches!(phase, Phase::Verify) as u64;
                let a = matches!(arm, Arm::Poisoned) as u64;
                (1 << 60) | (p << 59) | (a << 58) | index
            }
            Stream::Attack => 2 << 60,
            Stream::Posterior => 3 << 60,
            Stream::Coverage => 4 << 60,
            Stream::Data => 5 << 60,
            Stream::Other(i) => (6 << 60) | (i & ((1 << 60) - 1)),
        }
    }
}

/// SplitMix64 step; also used as a cheap stateless mixer.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless 64-bit hash of a sequence of words.
pub fn mix(words: &[u64]) -> u64 {
    let mut s = 0x6A09_E667_F3BC_C909u64;
    let mut out = splitmix64(&mut s);
    for &w in words {
        s ^= w.wrapping_add(out);
        out = splitmix64(&mut s);
    }
    out
}

/// Child seed for a path such as (attack, epsilon index, replicate).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut words = Vec::with_capacity(path.len() + 1);
    words.push(master);
    words.extend_from_slice(path);
    mix(&words)
}

fn key_for(master: u64) -> [u8; 32] {
    let mut s = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    key
}

pub fn stream_rng(master: u64, stream: Stream) -> AuditRng {
    let mut rng = ChaCha12Rng::from_seed(key_for(master));
    rng.set_stream(stream.id());
    rng
}

/// Uniform draw in [0, 1) from a 64-bit hash.
pub fn unit_from_hash(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
