//! Differential-drive kinematics: sampling-based velocity and odometry motion
//! models plus the sensor lever-arm transform.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::Vec2;
use crate::stats::wrap_to_pi;

/// Planar pose of the robot frame. `phi` is unbounded (unwrapped); wrap with
/// [`crate::stats::wrap_to_pi`] when comparing headings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, phi: f64) -> Self {
        Self { x, y, phi }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        self.position().distance(other.position())
    }
}

/// Commanded linear and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

/// Fixed offset between the robot (odometry) frame and the sensor, in robot
/// coordinates. Must be nonzero: the method needs rotations to move the
/// sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeverArm {
    pub dx: f64,
    pub dy: f64,
}

impl LeverArm {
    pub fn new(dx: f64, dy: f64) -> Self {
        assert!(
            dx != 0.0 || dy != 0.0,
            "lever arm must be nonzero so rotations move the sensor"
        );
        Self { dx, dy }
    }
}

/// Sensor position in world coordinates: robot position plus the rotated
/// lever arm.
pub fn sensor_position(pose: &Pose, arm: &LeverArm) -> Vec2 {
    pose.position() + Vec2::new(arm.dx, arm.dy).rotated(pose.phi)
}

/// Noise coefficients of the velocity motion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityNoise {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
}

/// Noise coefficients of the odometry motion model (rot1-trans-rot2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryNoise {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

/// Calibrated noise parameters for both motion models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionNoiseParams {
    pub velocity: VelocityNoise,
    pub odometry: OdometryNoise,
}

impl MotionNoiseParams {
    /// Parameters measured on a Viking MI 422P lawn mower; preset name
    /// `viking-mi-422p` in config files.
    pub const fn viking_mi_422p() -> Self {
        Self {
            velocity: VelocityNoise {
                a1: 0.0346,
                a2: 0.0316,
                a3: 0.0755,
                a4: 0.0566,
                a5: 0.0592,
                a6: 0.0678,
            },
            odometry: OdometryNoise {
                a1: 0.0849,
                a2: 0.0412,
                a3: 0.0316,
                a4: 0.0173,
            },
        }
    }

    pub const fn noise_free() -> Self {
        Self {
            velocity: VelocityNoise {
                a1: 0.0,
                a2: 0.0,
                a3: 0.0,
                a4: 0.0,
                a5: 0.0,
                a6: 0.0,
            },
            odometry: OdometryNoise {
                a1: 0.0,
                a2: 0.0,
                a3: 0.0,
                a4: 0.0,
            },
        }
    }
}

/// Zero-mean Gaussian draw with the given variance. Always consumes exactly
/// one standard-normal draw so sequences stay aligned across noise settings;
/// variance 0 yields exactly 0.
fn sample_noise<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * variance.max(0.0).sqrt()
}

/// Advances `pose` along a noisy circular arc for `dt` seconds. With all
/// coefficients zero this is exact unicycle integration.
pub fn sample_velocity_motion<R: Rng + ?Sized>(
    pose: &Pose,
    cmd: &VelocityCommand,
    dt: f64,
    params: &VelocityNoise,
    rng: &mut R,
) -> Pose {
    debug_assert!(dt > 0.0);
    let v2 = cmd.v * cmd.v;
    let w2 = cmd.omega * cmd.omega;
    let v = cmd.v + sample_noise(rng, params.a1 * v2 + params.a2 * w2);
    let w = cmd.omega + sample_noise(rng, params.a3 * v2 + params.a4 * w2);
    let gamma = sample_noise(rng, params.a5 * v2 + params.a6 * w2);

    let (x, y) = if w.abs() < 1e-6 {
        // Straight-line limit of the arc equations (midpoint heading).
        let h = pose.phi + 0.5 * w * dt;
        (pose.x + v * dt * h.cos(), pose.y + v * dt * h.sin())
    } else {
        let r = v / w;
        (
            pose.x - r * pose.phi.sin() + r * (pose.phi + w * dt).sin(),
            pose.y + r * pose.phi.cos() - r * (pose.phi + w * dt).cos(),
        )
    };
    Pose::new(x, y, pose.phi + w * dt + gamma * dt)
}

/// Relative odometry increment in rot1-trans-rot2 form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryIncrement {
    pub rot1: f64,
    pub trans: f64,
    pub rot2: f64,
}

impl OdometryIncrement {
    /// Decomposes the relative motion between two poses. A pure in-place
    /// rotation is attributed entirely to rot2 so that noise does not scale
    /// with the absolute heading.
    pub fn between(prev: &Pose, curr: &Pose) -> Self {
        let dx = curr.x - prev.x;
        let dy = curr.y - prev.y;
        let trans = dx.hypot(dy);
        let rot1 = if trans < 1e-9 {
            0.0
        } else {
            wrap_to_pi(dy.atan2(dx) - prev.phi)
        };
        let rot2 = wrap_to_pi(curr.phi - prev.phi - rot1);
        Self { rot1, trans, rot2 }
    }
}

/// Noise magnitude for a rotation component: a backward step decomposes into
/// rotations near pi, but the wheels only turned by the complement, so the
/// noise must scale with the backward-equivalent angle.
fn effective_rotation(rot: f64) -> f64 {
    let fwd = wrap_to_pi(rot).abs();
    let bwd = wrap_to_pi(rot - std::f64::consts::PI).abs();
    fwd.min(bwd)
}

/// Applies the relative motion between `odom_prev` and `odom_curr` to `pose`,
/// corrupted by the odometry motion model. With all coefficients zero the
/// increment is reproduced exactly.
pub fn sample_odometry_motion<R: Rng + ?Sized>(
    pose: &Pose,
    odom_prev: &Pose,
    odom_curr: &Pose,
    params: &OdometryNoise,
    rng: &mut R,
) -> Pose {
    let inc = OdometryIncrement::between(odom_prev, odom_curr);
    let r1sq = effective_rotation(inc.rot1).powi(2);
    let r2sq = effective_rotation(inc.rot2).powi(2);
    let tsq = inc.trans * inc.trans;
    let rot1 = inc.rot1 - sample_noise(rng, params.a1 * r1sq + params.a2 * tsq);
    let trans = inc.trans - sample_noise(rng, params.a3 * tsq + params.a4 * (r1sq + r2sq));
    let rot2 = inc.rot2 - sample_noise(rng, params.a1 * r2sq + params.a2 * tsq);

    Pose::new(
        pose.x + trans * (pose.phi + rot1).cos(),
        pose.y + trans * (pose.phi + rot1).sin(),
        pose.phi + rot1 + rot2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const TOL: f64 = 1e-12;

    fn zero_vel() -> VelocityNoise {
        MotionNoiseParams::noise_free().velocity
    }

    fn zero_odom() -> OdometryNoise {
        MotionNoiseParams::noise_free().odometry
    }

    #[test]
    fn sensor_position_forward_arm() {
        let p = sensor_position(&Pose::new(0.0, 0.0, 0.0), &LeverArm::new(0.3, 0.0));
        assert!((p.x - 0.3).abs() < TOL && p.y.abs() < TOL);
    }

    #[test]
    fn sensor_position_quarter_turn() {
        let p = sensor_position(&Pose::new(0.0, 0.0, PI / 2.0), &LeverArm::new(0.3, 0.0));
        assert!(p.x.abs() < TOL && (p.y - 0.3).abs() < TOL);
    }

    #[test]
    fn sensor_position_half_turn() {
        let p = sensor_position(&Pose::new(1.0, 2.0, PI), &LeverArm::new(0.3, 0.0));
        assert!((p.x - 0.7).abs() < TOL && (p.y - 2.0).abs() < TOL);
    }

    #[test]
    fn lever_arm_is_isometry() {
        let arm = LeverArm::new(0.3, -0.1);
        let arm_len = Vec2::new(arm.dx, arm.dy).norm();
        for phi in [-3.0, -0.5, 0.0, 1.2, 2.9] {
            let pose = Pose::new(5.0, -2.0, phi);
            let s = sensor_position(&pose, &arm);
            assert!((s.distance(pose.position()) - arm_len).abs() < TOL);
        }
    }

    #[test]
    fn noise_free_straight_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_velocity_motion(
            &Pose::new(0.0, 0.0, 0.0),
            &VelocityCommand::new(1.0, 0.0),
            1.0,
            &zero_vel(),
            &mut rng,
        );
        assert!((p.x - 1.0).abs() < TOL && p.y.abs() < TOL && p.phi.abs() < TOL);
    }

    #[test]
    fn noise_free_pure_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_velocity_motion(
            &Pose::new(0.0, 0.0, 0.0),
            &VelocityCommand::new(0.0, PI / 2.0),
            1.0,
            &zero_vel(),
            &mut rng,
        );
        assert!(p.x.abs() < TOL && p.y.abs() < TOL);
        assert!((p.phi - PI / 2.0).abs() < TOL);
    }

    #[test]
    fn noise_free_quarter_arc() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_velocity_motion(
            &Pose::new(0.0, 0.0, 0.0),
            &VelocityCommand::new(1.0, PI / 2.0),
            1.0,
            &zero_vel(),
            &mut rng,
        );
        let r = 2.0 / PI;
        assert!((p.x - r).abs() < TOL && (p.y - r).abs() < TOL);
        assert!((p.phi - PI / 2.0).abs() < TOL);
    }

    #[test]
    fn velocity_sampler_matches_model_variance() {
        // Monte-Carlo oracle: the sampled forward speed must reproduce the
        // model's own standard deviations.
        let params = MotionNoiseParams::viking_mi_422p().velocity;
        let cmd = VelocityCommand::new(0.3, 0.6);
        let dt = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut speeds = Vec::with_capacity(n);
        let mut dphis = Vec::with_capacity(n);
        let start = Pose::new(0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = sample_velocity_motion(&start, &cmd, dt, &params, &mut rng);
            speeds.push(p.position().norm() / dt);
            dphis.push(p.phi / dt);
        }
        let v2 = cmd.v * cmd.v;
        let w2 = cmd.omega * cmd.omega;
        let expected_speed_std = (params.a1 * v2 + params.a2 * w2).sqrt();
        let got = crate::stats::std_dev(&speeds);
        assert!(
            (got - expected_speed_std).abs() / expected_speed_std < 0.03,
            "speed std {got} vs {expected_speed_std}"
        );
        let expected_dphi_std =
            ((params.a3 * v2 + params.a4 * w2) + (params.a5 * v2 + params.a6 * w2)).sqrt();
        let got_phi = crate::stats::std_dev(&dphis);
        assert!(
            (got_phi - expected_dphi_std).abs() / expected_dphi_std < 0.03,
            "heading-rate std {got_phi} vs {expected_dphi_std}"
        );
    }

    #[test]
    fn noise_free_odometry_reproduces_increment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prev = Pose::new(0.0, 0.0, 0.0);
        let curr = Pose::new(1.0, 0.0, 0.0);
        let pose = Pose::new(3.0, 4.0, PI / 2.0);
        let out = sample_odometry_motion(&pose, &prev, &curr, &zero_odom(), &mut rng);
        assert!((out.x - 3.0).abs() < TOL);
        assert!((out.y - 5.0).abs() < TOL);
        assert!((out.phi - PI / 2.0).abs() < TOL);
    }

    #[test]
    fn zero_increment_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prev = Pose::new(2.0, -1.0, 0.7);
        let pose = Pose::new(0.5, 0.5, -2.0);
        let out = sample_odometry_motion(&pose, &prev, &prev, &zero_odom(), &mut rng);
        assert_eq!(out, pose);
    }

    #[test]
    fn odometry_sampler_matches_model_variance() {
        let params = MotionNoiseParams::viking_mi_422p().odometry;
        let prev = Pose::new(0.0, 0.0, 0.0);
        let curr = Pose::new(1.0, 0.0, 0.0);
        let start = Pose::new(0.0, 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut trans = Vec::with_capacity(n);
        for _ in 0..n {
            let p = sample_odometry_motion(&start, &prev, &curr, &params, &mut rng);
            trans.push(p.position().norm());
        }
        // Pure translation: rot1 = rot2 = 0, so trans std is sqrt(a3)*trans.
        let expected = params.a3.sqrt();
        let got = crate::stats::std_dev(&trans);
        assert!(
            (got - expected).abs() / expected < 0.03,
            "trans std {got} vs {expected}"
        );
    }

    #[test]
    fn samplers_are_bit_exact_under_a_fixed_seed() {
        let params = MotionNoiseParams::viking_mi_422p();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut pose = Pose::new(0.0, 0.0, 0.0);
            for _ in 0..100 {
                pose = sample_velocity_motion(
                    &pose,
                    &VelocityCommand::new(0.3, 0.2),
                    0.05,
                    &params.velocity,
                    &mut rng,
                );
            }
            pose
        };
        let a = run();
        let b = run();
        assert_eq!(a.x.to_bits(), b.x.to_bits());
        assert_eq!(a.y.to_bits(), b.y.to_bits());
        assert_eq!(a.phi.to_bits(), b.phi.to_bits());
    }
}
