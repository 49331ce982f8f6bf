//! Seeded random streams and geometric samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Derives an independent generator for `(seed, stream)`.
///
/// Every parallel work item gets its own stream so results do not
/// depend on scheduling.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes several labels into one stream id (splitmix64 finalizer).
pub fn stream_id(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = splitmix(h);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform direction on the unit sphere in ℝⁿ (normalized Gaussian).
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = crate::matrix::norm(&v);
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point in the closed ball `B_r(center)`.
pub fn in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let u = unit_vector(rng, n);
    let s: f64 = rng.random::<f64>().powf(1.0 / n as f64) * radius;
    center.iter().zip(&u).map(|(c, d)| c + s * d).collect()
}

/// Uniform point in an axis-aligned box.
pub fn in_box<R: Rng + ?Sized>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| a + (b - a) * rng.random::<f64>())
        .collect()
}

/// Dirichlet(1, …, 1) weights: a uniform point of the standard simplex.
pub fn simplex_weights<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 3).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream(7, 3).random()).collect();
        assert_eq!(a, b);
        let c: u64 = stream(7, 4).random();
        assert_ne!(a[0], c);
        assert_ne!(stream_id(&[1, 2]), stream_id(&[2, 1]));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = stream(1, 0);
        for _ in 0..1000 {
            let p = in_ball(&mut rng, &[1.0, -2.0, 0.5], 0.25);
            let d = crate::matrix::norm(&[p[0] - 1.0, p[1] + 2.0, p[2] - 0.5]);
            assert!(d <= 0.25 + 1e-15);
        }
    }

    #[test]
    fn simplex_weights_sum_to_one() {
        let mut rng = stream(2, 0);
        let w = simplex_weights(&mut rng, 17);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x >= 0.0));
    }
}
