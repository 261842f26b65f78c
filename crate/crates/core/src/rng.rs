//! Named random streams derived from one scenario seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent stream for `purpose` (and sub-index, e.g. a station id).
pub fn stream(seed: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    let s = splitmix(seed ^ splitmix(fnv1a(purpose) ^ splitmix(index)));
    ChaCha8Rng::seed_from_u64(s)
}

/// Circularly-symmetric complex Gaussian with variance `var`.
pub fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = libm::sqrt(var / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_separated() {
        let a: u64 = stream(7, "backoff", 0).random();
        let b: u64 = stream(7, "traffic", 0).random();
        let c: u64 = stream(7, "backoff", 1).random();
        let d: u64 = stream(7, "backoff", 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, d);
    }

    #[test]
    fn cn_unit_power() {
        let mut r = stream(1, "t", 0);
        let n = 50_000;
        let p: f64 = (0..n).map(|_| cn(&mut r, 1.0).norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 0.03);
    }
}
