//! Seeded, platform-independent sampling of points and directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::vector::HVector;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent seed for a named consumer from a master seed.
///
/// FNV-1a over the label, mixed with the master seed through splitmix64.
pub fn sub_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniformly distributed point on the unit sphere of `R^dim`.
pub fn unit_direction<R: Rng>(rng: &mut R, dim: usize) -> HVector {
    loop {
        let g = HVector::from_fn(dim, |_| rng.sample(StandardNormal));
        if let Some(d) = g.normalized() {
            return d;
        }
    }
}

/// Uniformly distributed point in the closed ball of the given radius.
pub fn point_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> HVector {
    let d = unit_direction(rng, dim);
    let u: f64 = rng.random();
    d.scaled(radius * u.powf(1.0 / dim as f64))
}
