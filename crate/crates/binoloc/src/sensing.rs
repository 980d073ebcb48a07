//! The noisy binary inside/outside sensor and its measurement likelihood.

use rand::Rng;
use thiserror::Error;

use crate::geometry::{PolygonMap, Vec2};

/// Configuration of the binary sensor. `noise_factor` is the probability that
/// a reading is replaced by a fair coin flip: 0 is always accurate, 1 is
/// fully random.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarySensorConfig {
    noise_factor: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("sensor.noise must lie in [0, 1], got {0}")]
    NoiseOutOfRange(f64),
    #[error("pf.w_hat must lie in (0.5, 1), got {0}")]
    WeightOutOfRange(f64),
}

impl BinarySensorConfig {
    pub fn new(noise_factor: f64) -> Result<Self, SensingError> {
        if !(0.0..=1.0).contains(&noise_factor) || noise_factor.is_nan() {
            return Err(SensingError::NoiseOutOfRange(noise_factor));
        }
        Ok(Self { noise_factor })
    }

    pub fn noise_factor(&self) -> f64 {
        self.noise_factor
    }
}

/// One binary reading at `sensor_pos`: the ground truth inside/outside bit,
/// replaced by a fair coin with probability `noise_factor`.
pub fn measure<R: Rng + ?Sized>(
    map: &PolygonMap,
    sensor_pos: Vec2,
    cfg: &BinarySensorConfig,
    rng: &mut R,
) -> bool {
    let truth = map.contains(sensor_pos);
    if rng.gen::<f64>() < cfg.noise_factor {
        rng.gen::<bool>()
    } else {
        truth
    }
}

/// Particle weight parameter; must exceed 0.5 so agreement counts for more
/// than disagreement, and stay below 1 so no weight ever reaches zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParam(f64);

impl WeightParam {
    pub fn new(w_hat: f64) -> Result<Self, SensingError> {
        if !(w_hat > 0.5 && w_hat < 1.0) {
            return Err(SensingError::WeightOutOfRange(w_hat));
        }
        Ok(Self(w_hat))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Likelihood of observing `s` from a hypothesized sensor position: `w_hat`
/// when the hypothesis would see the same bit, `1 - w_hat` otherwise.
pub fn likelihood(map: &PolygonMap, hypothesis_sensor_pos: Vec2, s: bool, w_hat: WeightParam) -> f64 {
    if map.contains(hypothesis_sensor_pos) == s {
        w_hat.value()
    } else {
        1.0 - w_hat.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square() -> PolygonMap {
        PolygonMap::from_vertices(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn noise_free_measure_equals_ground_truth() {
        let map = square();
        let cfg = BinarySensorConfig::new(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(measure(&map, Vec2::new(0.5, 0.5), &cfg, &mut rng));
            assert!(!measure(&map, Vec2::new(2.0, 0.5), &cfg, &mut rng));
        }
    }

    #[test]
    fn full_noise_is_a_fair_coin() {
        let map = square();
        let cfg = BinarySensorConfig::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| measure(&map, Vec2::new(0.5, 0.5), &cfg, &mut rng))
            .count();
        let mean = ones as f64 / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn partial_noise_mixes_truth_and_coin() {
        // P(s=1 | inside) = 0.6 * 1 + 0.4 * 0.5 = 0.8.
        let map = square();
        let cfg = BinarySensorConfig::new(0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| measure(&map, Vec2::new(0.5, 0.5), &cfg, &mut rng))
            .count();
        let mean = ones as f64 / n as f64;
        assert!((mean - 0.8).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn likelihood_branches() {
        let map = square();
        let w = WeightParam::new(0.75).unwrap();
        let inside = Vec2::new(0.5, 0.5);
        assert_eq!(likelihood(&map, inside, true, w), 0.75);
        assert_eq!(likelihood(&map, inside, false, w), 0.25);
    }

    #[test]
    fn likelihoods_of_complementary_bits_sum_to_one() {
        let map = square();
        let w = WeightParam::new(0.9).unwrap();
        for p in [Vec2::new(0.5, 0.5), Vec2::new(3.0, 3.0), Vec2::new(1.0, 0.5)] {
            let sum = likelihood(&map, p, true, w) + likelihood(&map, p, false, w);
            assert!((sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn half_weight_is_rejected() {
        assert_eq!(
            WeightParam::new(0.5),
            Err(SensingError::WeightOutOfRange(0.5))
        );
        assert!(WeightParam::new(1.0).is_err());
        assert!(WeightParam::new(0.75).is_ok());
    }

    #[test]
    fn noise_factor_range_is_validated() {
        assert!(BinarySensorConfig::new(-0.1).is_err());
        assert!(BinarySensorConfig::new(1.5).is_err());
        assert!(BinarySensorConfig::new(0.4).is_ok());
    }
}
