//! Small shared helpers: counter-based seed derivation and quantiles.

/// SplitMix64 finalizer; bijective, well-mixed.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and a tag path
/// (setting, grid index, replication, …). Order-sensitive by construction.
pub(crate) fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = mix(master);
    for &t in tags {
        s = mix(s ^ mix(t));
    }
    s
}

/// Linear-interpolation quantile of an ascending-sorted sample (the common
/// "type 7" definition: index h = p(n−1), interpolate neighbors).
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}
