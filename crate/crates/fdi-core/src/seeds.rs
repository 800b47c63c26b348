//! Deterministic seed derivation. Every stage derives its stream from the
//! run seed plus stable identifiers (document id, purpose tag, index), so
//! results do not depend on worker count or processing order.

/// SplitMix64 finalizer; decorrelates structured inputs like `seed ^ index`
/// before they become RNG seeds for distinct purposes.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// FNV-1a over the id bytes, mixed with the run seed. Stable across
/// platforms and releases (unlike the std hasher).
pub fn doc_seed(run_seed: u64, doc_id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in doc_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    splitmix64(h ^ run_seed)
}

/// Purpose-tagged child seed, so masking and decoding streams for the same
/// document never coincide.
pub fn stage_seed(parent: u64, stage: u64) -> u64 {
    splitmix64(parent ^ stage)
}

/// Stage tag: sampling concept masks before generation.
pub const STAGE_MASK: u64 = 0x6d61_736b; // "mask"
/// Stage tag: decoding replacement text into blanks.
pub const STAGE_DECODE: u64 = 0x6465_636f; // "deco"
/// Stage tag: random masking for training data.
pub const STAGE_TRAIN: u64 = 0x7472_6169; // "trai"
/// Stage tag: shuffling review sets.
pub const STAGE_QUIZ: u64 = 0x7175_697a; // "quiz"
