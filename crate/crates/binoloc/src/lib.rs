//! Global localization for a differential-drive robot equipped with odometry
//! and a single noisy binary inside/outside sensor.
//!
//! The pipeline: a wall follower steers the robot along the boundary of a
//! polygon map, the odometry path is compressed into dominant points, the
//! path's turning function is matched against the boundary's turning function
//! to produce a first pose estimate, and a particle filter refines that
//! estimate while the robot keeps following the wall.

pub mod config;
pub mod geometry;
pub mod land_nav;
pub mod motion;
pub mod particle_filter;
pub mod report;
pub mod sensing;
pub mod sim;
pub mod stats;
pub mod wall_follower;

pub use geometry::{OrientationProfile, PolygonMap, Vec2};
pub use motion::{LeverArm, MotionNoiseParams, Pose, VelocityCommand};
