/// Derives an independent sub-seed from a base seed and a purpose tag.
///
/// SplitMix64 finalizer; used wherever one user-facing seed has to fan out
/// into several independent RNG streams (per-tree bootstraps, per-stage
/// shuffles) without the streams aliasing each other.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
