//! Deterministic sub-seed derivation.
//!
//! Batch items and sweep cells get their own seeds derived from the run
//! seed and a stable string id, so execution order and parallelism cannot
//! change any result. FNV-1a absorbs the bytes, a splitmix64 finalizer
//! provides avalanche; both are fixed algorithms, stable across platforms
//! and releases.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn sub_seed(seed: u64, id: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    for &b in id.as_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}
