//! Counter-style seed derivation.
//!
//! Every random draw in a campaign is keyed by a path of integers
//! (master seed, experiment, point, trial, stream). Hashing the path instead
//! of advancing a shared generator keeps results independent of how trials are
//! scheduled across workers.

/// Stream tag for the noise block `W`.
pub const NOISE_STREAM: u64 = 0x4e4f495345;
/// Stream tag for the source waveform `s`.
pub const SIGNAL_STREAM: u64 = 0x5349474e414c;
/// Stream tag for an auxiliary pure-noise block.
pub const PURE_NOISE_STREAM: u64 = 0x50555245;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a path of integers into one seed.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(root), |acc, &p| mix64(acc ^ mix64(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}
