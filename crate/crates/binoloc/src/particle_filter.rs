//! Systematic search: particles seeded around the land-navigation estimate,
//! propagated with odometry increments, weighted by the binary likelihood and
//! resampled with a low-variance scheme.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::PolygonMap;
use crate::land_nav::PoseEstimate;
use crate::motion::{sample_odometry_motion, sensor_position, LeverArm, OdometryNoise, Pose};
use crate::sensing::{likelihood, WeightParam};
use crate::stats::{circular_mean, circular_std};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pose: Pose,
    pub weight: f64,
}

/// Per-coordinate standard deviations of the seeding distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedStds {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_phi: f64,
}

impl SeedStds {
    /// Seeding spread from the land-navigation error statistics: mean error
    /// plus three standard deviations per coordinate, so the particles cover
    /// an area large enough around the initial estimate.
    pub fn from_error_stats(mu_dx: f64, sigma_dx: f64, mu_dphi: f64, sigma_dphi: f64) -> Self {
        let xy = mu_dx + 3.0 * sigma_dx;
        Self {
            sigma_x: xy,
            sigma_y: xy,
            sigma_phi: mu_dphi + 3.0 * sigma_dphi,
        }
    }
}

/// Weighted pose hypotheses. Weights are kept normalized; the particle count
/// is invariant under resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

impl ParticleSet {
    /// Draws `count` particles around a pose estimate, independently normal
    /// per coordinate, with uniform weights.
    pub fn seed<R: Rng + ?Sized>(
        estimate: &PoseEstimate,
        stds: &SeedStds,
        count: usize,
        rng: &mut R,
    ) -> Self {
        assert!(count > 0, "particle count must be positive");
        let w = 1.0 / count as f64;
        let mut draw = |mean: f64, std: f64| {
            let z: f64 = rng.sample(StandardNormal);
            mean + std * z
        };
        let particles = (0..count)
            .map(|_| Particle {
                pose: Pose::new(
                    draw(estimate.position.x, stds.sigma_x),
                    draw(estimate.position.y, stds.sigma_y),
                    draw(estimate.phi, stds.sigma_phi),
                ),
                weight: w,
            })
            .collect();
        Self { particles }
    }

    pub fn from_particles(particles: Vec<Particle>) -> Self {
        assert!(!particles.is_empty());
        let mut set = Self { particles };
        set.normalize();
        set
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    fn normalize(&mut self) {
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        debug_assert!(total > 0.0, "weight mass cannot vanish");
        for p in &mut self.particles {
            p.weight /= total;
        }
    }

    /// Propagates every particle through the odometry motion model with the
    /// increment between the two odometry poses. Weights are unchanged.
    pub fn predict<R: Rng + ?Sized>(
        &mut self,
        odom_prev: &Pose,
        odom_curr: &Pose,
        params: &OdometryNoise,
        rng: &mut R,
    ) {
        for p in &mut self.particles {
            p.pose = sample_odometry_motion(&p.pose, odom_prev, odom_curr, params, rng);
        }
    }

    /// Multiplies every weight by the binary-measurement likelihood at the
    /// particle's sensor position, then renormalizes. No weight can reach
    /// zero: the likelihood is bounded below by `1 - w_hat`.
    pub fn update_weights(&mut self, map: &PolygonMap, s: bool, arm: &LeverArm, w_hat: WeightParam) {
        for p in &mut self.particles {
            let hyp = sensor_position(&p.pose, arm);
            p.weight *= likelihood(map, hyp, s, w_hat);
        }
        self.normalize();
    }

    /// Effective sample size `1 / sum(w^2)`.
    pub fn effective_sample_size(&self) -> f64 {
        let sum_sq: f64 = self.particles.iter().map(|p| p.weight * p.weight).sum();
        1.0 / sum_sq
    }

    /// Low-variance (systematic) resampling to equally weighted particles.
    pub fn systematic_resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.particles.len();
        let spacing = 1.0 / n as f64;
        let start: f64 = rng.gen::<f64>() * spacing;
        let mut out = Vec::with_capacity(n);
        let mut cumulative = self.particles[0].weight;
        let mut idx = 0;
        for k in 0..n {
            let target = start + k as f64 * spacing;
            while cumulative < target && idx + 1 < n {
                idx += 1;
                cumulative += self.particles[idx].weight;
            }
            out.push(Particle {
                pose: self.particles[idx].pose,
                weight: spacing,
            });
        }
        self.particles = out;
    }

    /// Resamples only when the effective sample size falls below
    /// `ratio * count`. Returns whether resampling ran.
    pub fn resample_if_needed<R: Rng + ?Sized>(&mut self, ratio: f64, rng: &mut R) -> bool {
        if self.effective_sample_size() < ratio * self.particles.len() as f64 {
            self.systematic_resample(rng);
            true
        } else {
            false
        }
    }

    /// Weighted standard deviation of the particle positions around their
    /// mean, meters.
    pub fn position_std(&self) -> f64 {
        let est = self.estimate();
        let var: f64 = self
            .particles
            .iter()
            .map(|p| {
                let d = p.pose.position().distance(est.position());
                p.weight * d * d
            })
            .sum();
        var.sqrt()
    }

    /// Weighted circular standard deviation of the particle headings.
    pub fn heading_std(&self) -> f64 {
        let angles: Vec<f64> = self.particles.iter().map(|p| p.pose.phi).collect();
        let weights: Vec<f64> = self.particles.iter().map(|p| p.weight).collect();
        circular_std(&angles, &weights)
    }

    /// True iff the heading spread has contracted below `sigma_phi_max`.
    pub fn converged(&self, sigma_phi_max: f64) -> bool {
        self.heading_std() < sigma_phi_max
    }

    /// Weighted mean position and circular mean heading.
    pub fn estimate(&self) -> Pose {
        assert!(!self.particles.is_empty(), "estimate of an empty set");
        let mut x = 0.0;
        let mut y = 0.0;
        for p in &self.particles {
            x += p.weight * p.pose.x;
            y += p.weight * p.pose.y;
        }
        let angles: Vec<f64> = self.particles.iter().map(|p| p.pose.phi).collect();
        let weights: Vec<f64> = self.particles.iter().map(|p| p.weight).collect();
        Pose::new(x, y, circular_mean(&angles, &weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::motion::MotionNoiseParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn square() -> PolygonMap {
        PolygonMap::from_vertices(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(0.0, 10.0),
        ])
        .unwrap()
    }

    fn an_estimate() -> PoseEstimate {
        PoseEstimate {
            position: Vec2::new(2.0, 3.0),
            phi: 0.5,
            c_err: 0.1,
            vertex: 1,
        }
    }

    #[test]
    fn seed_spread_formula_reproduces_reference_stats() {
        let stds = SeedStds::from_error_stats(0.13, 0.06, 0.55, 0.09);
        assert!((stds.sigma_x - 0.31).abs() < 1e-12);
        assert!((stds.sigma_y - 0.31).abs() < 1e-12);
        assert!((stds.sigma_phi - 0.82).abs() < 1e-12);
    }

    #[test]
    fn degenerate_stds_collapse_to_the_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let stds = SeedStds {
            sigma_x: 0.0,
            sigma_y: 0.0,
            sigma_phi: 0.0,
        };
        let set = ParticleSet::seed(&an_estimate(), &stds, 50, &mut rng);
        for p in set.particles() {
            assert_eq!(p.pose, Pose::new(2.0, 3.0, 0.5));
            assert!((p.weight - 0.02).abs() < 1e-15);
        }
    }

    #[test]
    fn seeding_is_deterministic_per_seed() {
        let stds = SeedStds::from_error_stats(0.13, 0.06, 0.55, 0.09);
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = ParticleSet::seed(&an_estimate(), &stds, 100, &mut r1);
        let b = ParticleSet::seed(&an_estimate(), &stds, 100, &mut r2);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_increment_prediction_is_identity_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let stds = SeedStds::from_error_stats(0.13, 0.06, 0.55, 0.09);
        let mut set = ParticleSet::seed(&an_estimate(), &stds, 20, &mut rng);
        let before = set.clone();
        let odom = Pose::new(4.0, 4.0, 1.0);
        set.predict(
            &odom,
            &odom,
            &MotionNoiseParams::noise_free().odometry,
            &mut rng,
        );
        assert_eq!(set, before);
    }

    #[test]
    fn unit_increment_translates_along_each_heading() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let particles = vec![
            Particle { pose: Pose::new(0.0, 0.0, 0.0), weight: 0.5 },
            Particle { pose: Pose::new(1.0, 1.0, PI / 2.0), weight: 0.5 },
        ];
        let mut set = ParticleSet::from_particles(particles);
        set.predict(
            &Pose::new(0.0, 0.0, 0.0),
            &Pose::new(1.0, 0.0, 0.0),
            &MotionNoiseParams::noise_free().odometry,
            &mut rng,
        );
        let p = set.particles();
        assert!(p[0].pose.distance(&Pose::new(1.0, 0.0, 0.0)) < 1e-12);
        assert!(p[1].pose.distance(&Pose::new(1.0, 2.0, PI / 2.0)) < 1e-12);
    }

    #[test]
    fn prediction_spread_matches_odometry_model() {
        let params = MotionNoiseParams::viking_mi_422p().odometry;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let particles = vec![
            Particle {
                pose: Pose::new(0.0, 0.0, 0.0),
                weight: 1.0,
            };
            100_000
        ];
        let mut set = ParticleSet::from_particles(particles);
        set.predict(
            &Pose::new(0.0, 0.0, 0.0),
            &Pose::new(1.0, 0.0, 0.0),
            &params,
            &mut rng,
        );
        let dists: Vec<f64> = set
            .particles()
            .iter()
            .map(|p| p.pose.position().norm())
            .collect();
        let expected = params.a3.sqrt();
        let got = crate::stats::std_dev(&dists);
        assert!(
            (got - expected).abs() / expected < 0.05,
            "trans std {got} vs {expected}"
        );
    }

    #[test]
    fn agreeing_particles_keep_uniform_weights() {
        let map = square();
        let arm = LeverArm::new(0.3, 0.0);
        let w = WeightParam::new(0.75).unwrap();
        let particles = vec![
            Particle { pose: Pose::new(5.0, 5.0, 0.0), weight: 0.25 };
            4
        ];
        let mut set = ParticleSet::from_particles(particles);
        set.update_weights(&map, true, &arm, w);
        for p in set.particles() {
            assert!((p.weight - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn agreeing_particles_outweigh_disagreeing_three_to_one() {
        let map = square();
        let arm = LeverArm::new(0.3, 0.0);
        let w = WeightParam::new(0.75).unwrap();
        let particles = vec![
            Particle { pose: Pose::new(5.0, 5.0, 0.0), weight: 0.25 },
            Particle { pose: Pose::new(5.0, 5.0, 1.0), weight: 0.25 },
            Particle { pose: Pose::new(50.0, 5.0, 0.0), weight: 0.25 },
            Particle { pose: Pose::new(50.0, 5.0, 1.0), weight: 0.25 },
        ];
        let mut set = ParticleSet::from_particles(particles);
        set.update_weights(&map, true, &arm, w);
        let p = set.particles();
        assert!((p[0].weight / p[2].weight - 3.0).abs() < 1e-12);
        let sum: f64 = p.iter().map(|q| q.weight).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_particle_keeps_weight_one() {
        let map = square();
        let arm = LeverArm::new(0.3, 0.0);
        let w = WeightParam::new(0.75).unwrap();
        let mut set = ParticleSet::from_particles(vec![Particle {
            pose: Pose::new(-5.0, -5.0, 0.0),
            weight: 1.0,
        }]);
        set.update_weights(&map, true, &arm, w);
        assert_eq!(set.particles()[0].weight, 1.0);
    }

    #[test]
    fn weights_stay_positive_and_normalized_over_many_updates() {
        let map = square();
        let arm = LeverArm::new(0.3, 0.0);
        let w = WeightParam::new(0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let stds = SeedStds::from_error_stats(0.13, 0.06, 0.55, 0.09);
        let mut set = ParticleSet::seed(&an_estimate(), &stds, 200, &mut rng);
        for i in 0..50 {
            set.update_weights(&map, i % 3 != 0, &arm, w);
            let sum: f64 = set.particles().iter().map(|p| p.weight).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(set.particles().iter().all(|p| p.weight > 0.0));
        }
    }

    #[test]
    fn uniform_weights_do_not_trigger_resampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let stds = SeedStds::from_error_stats(0.13, 0.06, 0.55, 0.09);
        let mut set = ParticleSet::seed(&an_estimate(), &stds, 100, &mut rng);
        assert!((set.effective_sample_size() - 100.0).abs() < 1e-9);
        assert!(!set.resample_if_needed(0.5, &mut rng));
    }

    #[test]
    fn systematic_resampling_duplicates_surviving_strata() {
        // Weights (0.5, 0.5, 0, 0): for every start draw the strata land two
        // samples in each surviving particle.
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let particles = vec![
                Particle { pose: Pose::new(0.0, 0.0, 0.0), weight: 0.5 },
                Particle { pose: Pose::new(1.0, 0.0, 0.0), weight: 0.5 },
                Particle { pose: Pose::new(2.0, 0.0, 0.0), weight: 0.0 },
                Particle { pose: Pose::new(3.0, 0.0, 0.0), weight: 0.0 },
            ];
            let mut set = ParticleSet { particles };
            set.systematic_resample(&mut rng);
            let xs: Vec<f64> = set.particles().iter().map(|p| p.pose.x).collect();
            assert_eq!(xs, vec![0.0, 0.0, 1.0, 1.0]);
            assert!(set.particles().iter().all(|p| p.weight == 0.25));
        }
    }

    #[test]
    fn degenerate_weight_yields_copies_of_the_survivor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let particles = vec![
            Particle { pose: Pose::new(0.0, 0.0, 0.0), weight: 0.0 },
            Particle { pose: Pose::new(7.0, -2.0, 0.4), weight: 1.0 },
            Particle { pose: Pose::new(2.0, 0.0, 0.0), weight: 0.0 },
        ];
        let mut set = ParticleSet { particles };
        assert!(set.resample_if_needed(0.5, &mut rng));
        assert_eq!(set.len(), 3);
        for p in set.particles() {
            assert_eq!(p.pose, Pose::new(7.0, -2.0, 0.4));
        }
    }

    #[test]
    fn convergence_checks_circular_heading_spread() {
        let same = ParticleSet::from_particles(vec![
            Particle { pose: Pose::new(0.0, 0.0, 2.2), weight: 1.0 };
            10
        ]);
        assert!(same.converged(1e-6));

        let spread = ParticleSet::from_particles(
            (0..360)
                .map(|i| Particle {
                    pose: Pose::new(0.0, 0.0, 2.0 * PI * i as f64 / 360.0),
                    weight: 1.0,
                })
                .collect(),
        );
        assert!(!spread.converged(0.2));
    }

    #[test]
    fn heading_std_estimates_a_gaussian_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let particles: Vec<Particle> = (0..1000)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                Particle {
                    pose: Pose::new(0.0, 0.0, 0.1 * z),
                    weight: 1.0,
                }
            })
            .collect();
        let set = ParticleSet::from_particles(particles);
        let std = set.heading_std();
        assert!((std - 0.1).abs() < 0.02, "heading std {std}");
        assert!(set.converged(0.2));
    }

    #[test]
    fn estimate_of_single_particle_is_its_pose() {
        let set = ParticleSet::from_particles(vec![Particle {
            pose: Pose::new(1.0, 2.0, 3.0),
            weight: 1.0,
        }]);
        let est = set.estimate();
        assert!(est.distance(&Pose::new(1.0, 2.0, 3.0)) < 1e-12);
        assert_eq!(est.phi, 3.0);
    }

    #[test]
    fn estimate_averages_positions() {
        let set = ParticleSet::from_particles(vec![
            Particle { pose: Pose::new(0.0, 0.0, 0.0), weight: 1.0 },
            Particle { pose: Pose::new(2.0, 0.0, 0.0), weight: 1.0 },
        ]);
        let est = set.estimate();
        assert!((est.x - 1.0).abs() < 1e-12);
        assert!(est.y.abs() < 1e-12);
        assert!(est.phi.abs() < 1e-12);
    }

    #[test]
    fn estimate_heading_respects_wraparound() {
        let set = ParticleSet::from_particles(vec![
            Particle { pose: Pose::new(0.0, 0.0, 3.1), weight: 1.0 },
            Particle { pose: Pose::new(0.0, 0.0, -3.1), weight: 1.0 },
        ]);
        let est = set.estimate();
        assert!(crate::stats::angle_error(est.phi, PI) < 1e-9, "phi {}", est.phi);
    }

    #[test]
    fn resampling_preserves_particle_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let stds = SeedStds::from_error_stats(0.13, 0.06, 0.55, 0.09);
        let mut set = ParticleSet::seed(&an_estimate(), &stds, 333, &mut rng);
        set.systematic_resample(&mut rng);
        assert_eq!(set.len(), 333);
    }
}
