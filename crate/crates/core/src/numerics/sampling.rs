use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Seed for a reproducible sample stream.
///
/// The same seed and the same call sequence produce a bit-identical stream;
/// trace replay and the golden-file tests rely on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent stream derived from this seed. Streams with different
    /// tags never overlap, so pool sampling, initialization and batch draws
    /// can be seeded from one run seed.
    pub fn stream(self, tag: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(tag);
        rng
    }
}

/// Latin hypercube sample of `n` points in the given box.
///
/// Each dimension is split into `n` equal strata; the strata are permuted
/// independently per dimension and one uniform draw is placed inside each.
pub fn lhs_sample(n: usize, box_: &[(f64, f64)], seed: Seed) -> Result<Vec<Vec<f64>>> {
    let mut rng = seed.rng();
    lhs_sample_with(n, box_, &mut rng)
}

/// As [`lhs_sample`] but drawing from a caller-owned stream, so repeated
/// batches advance a single deterministic sequence.
pub fn lhs_sample_with<R: Rng>(n: usize, box_: &[(f64, f64)], rng: &mut R) -> Result<Vec<Vec<f64>>> {
    assert!(n >= 1, "lhs_sample requires n >= 1");
    for (dim, &(lo, hi)) in box_.iter().enumerate() {
        if !(lo < hi) {
            return Err(Error::InvalidBox { dim, lo, hi });
        }
    }
    let mut points = vec![vec![0.0; box_.len()]; n];
    for (j, &(lo, hi)) in box_.iter().enumerate() {
        let width = (hi - lo) / n as f64;
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (i, point) in points.iter_mut().enumerate() {
            let u: f64 = rng.random();
            point[j] = lo + (strata[i] as f64 + u) * width;
        }
    }
    Ok(points)
}

/// `n` draws from a centred normal with the given standard deviation.
pub fn sample_normal(n: usize, std: f64, seed: Seed) -> Result<Vec<f64>> {
    let mut rng = seed.rng();
    sample_normal_with(n, std, &mut rng)
}

pub fn sample_normal_with<R: Rng>(n: usize, std: f64, rng: &mut R) -> Result<Vec<f64>> {
    assert!(n >= 1, "sample_normal requires n >= 1");
    if std < 0.0 {
        return Err(Error::NegativeStd(std));
    }
    if std == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let dist = Normal::new(0.0, std).expect("validated std");
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stratum_lands_in_box() {
        let pts = lhs_sample(1, &[(0.0, 1.0)], Seed(0)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0][0] >= 0.0 && pts[0][0] < 1.0);
    }

    #[test]
    fn four_point_lhs_hits_every_quartile() {
        let pts = lhs_sample(4, &[(0.0, 1.0), (0.0, 1.0)], Seed(3)).unwrap();
        for dim in 0..2 {
            let mut hit = [false; 4];
            for p in &pts {
                let stratum = (p[dim] * 4.0).floor() as usize;
                hit[stratum.min(3)] = true;
            }
            assert!(hit.iter().all(|&h| h), "dimension {dim} missed a quartile");
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let a = lhs_sample(8, &[(-1.0, 1.0), (-1.0, 1.0)], Seed(42)).unwrap();
        let b = lhs_sample(8, &[(-1.0, 1.0), (-1.0, 1.0)], Seed(42)).unwrap();
        assert_eq!(a, b);
        let c = lhs_sample(8, &[(-1.0, 1.0), (-1.0, 1.0)], Seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_box_rejected() {
        assert!(lhs_sample(2, &[(1.0, 1.0)], Seed(0)).is_err());
        assert!(lhs_sample(2, &[(2.0, -1.0)], Seed(0)).is_err());
    }

    #[test]
    fn normal_zero_std_is_all_zeros() {
        assert_eq!(sample_normal(5, 0.0, Seed(1)).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn normal_negative_std_rejected() {
        assert!(sample_normal(1, -1.0, Seed(1)).is_err());
    }

    #[test]
    fn normal_moments_match() {
        let n = 100_000;
        let xs = sample_normal(n, 20.0, Seed(11)).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        let std = var.sqrt();
        // Mean within 5 standard errors of 0; std within [19.5, 20.5].
        let stderr = 20.0 / (n as f64).sqrt();
        assert!(mean.abs() <= 5.0 * stderr, "mean {mean} too far from 0");
        assert!((19.5..=20.5).contains(&std), "std {std} outside [19.5, 20.5]");
    }

    #[test]
    fn streams_are_independent() {
        let mut a = Seed(9).stream(0);
        let mut b = Seed(9).stream(1);
        let xa: f64 = a.random();
        let xb: f64 = b.random();
        assert_ne!(xa, xb);
    }
}
