//! Keyed ChaCha8 streams.
//!
//! Every random draw in the crate comes from a generator addressed by a
//! global seed plus a small key (member index, realization index, ...), so
//! results do not depend on how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for stream `key` under `seed`.
pub fn stream_rng(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let stream = key.iter().fold(0x5EED_u64, |acc, &k| mix64(acc ^ mix64(k)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fills `out` with standard normals by the Box–Muller transform. Uniforms
/// are consumed in pairs `(u1, u2)`, producing `r cos θ` then `r sin θ`; an
/// odd tail discards the sine.
pub fn fill_standard_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_mut(2);
    for chunk in &mut chunks {
        // 1 - U maps [0, 1) onto (0, 1], keeping ln finite.
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        chunk[0] = r * theta.cos();
        if let Some(second) = chunk.get_mut(1) {
            *second = r * theta.sin();
        }
    }
}
