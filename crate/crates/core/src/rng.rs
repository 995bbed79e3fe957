//! Keyed, order-independent random streams.
//!
//! Every stochastic decision draws from a ChaCha stream selected by
//! `(seed, purpose, stream)`, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tagger::SentenceKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Filter = 0x6669_6c74,
    Resample = 0x7265_7361,
    Split = 0x7370_6c74,
    Fewshot = 0x6665_7773,
    Synthetic = 0x7379_6e74,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn keyed_rng(seed: u64, purpose: Purpose, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ purpose as u64));
    rng.set_stream(stream);
    rng
}

pub fn sentence_stream(key: SentenceKey) -> u64 {
    splitmix64(key.article_id ^ splitmix64(key.sentence_index as u64 ^ 0x5eed))
}
