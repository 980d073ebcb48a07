//! Two-mode boundary controller: search drives straight until the smoothed
//! detection mean drops to 0.5, then the follow mode steers wiggly lines
//! along the boundary keeping that mean at 0.5.

use std::f64::consts::TAU;

use crate::motion::VelocityCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Search,
    Follow,
}

/// Controller state. Transitions are one-way: Search -> Follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallFollowerState {
    pub mode: Mode,
    /// Exponentially smoothed detection mean, in [0, 1].
    pub mu_d: f64,
    /// Relative linear velocity, in [0, 1].
    pub v_rel: f64,
    /// Step counter; increments once per control step in either mode.
    pub k: u64,
    /// Consecutive search steps with the mean at or below 0.5.
    confirm: u32,
}

impl WallFollowerState {
    /// Initial state: searching, detection mean 1.0 (start within the field).
    pub fn new() -> Self {
        Self {
            mode: Mode::Search,
            mu_d: 1.0,
            v_rel: 0.0,
            k: 0,
            confirm: 0,
        }
    }
}

impl Default for WallFollowerState {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallFollowerParams {
    /// Counter divider: wiggle period in control steps.
    pub counter_k: u32,
    /// Smoothing rate of the detection mean.
    pub a_mu: f64,
    /// Smoothing rate of the relative velocity.
    pub a_v: f64,
    /// Maximum linear velocity, m/s.
    pub v0: f64,
    /// Maximum angular velocity, rad/s.
    pub omega0: f64,
    /// Consecutive low-mean steps required before switching to Follow.
    /// Guards against a pair of coin-flipped readings starting the follow
    /// behavior far from the boundary, where it stalls at zero velocity.
    pub search_confirm: u32,
}

impl Default for WallFollowerParams {
    fn default() -> Self {
        Self {
            counter_k: 100,
            a_mu: 0.7,
            a_v: 0.7,
            v0: 0.3,
            omega0: 0.6,
            search_confirm: 6,
        }
    }
}

impl WallFollowerParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.counter_k == 0 {
            return Err("wall_follower.K must be positive".into());
        }
        for (name, v) in [("a_mu", self.a_mu), ("a_v", self.a_v)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("wall_follower.{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.v0 > 0.0) || !(self.omega0 > 0.0) {
            return Err("wall_follower.v0 and wall_follower.omega0 must be positive".into());
        }
        if self.search_confirm == 0 {
            return Err("wall_follower.search_confirm must be at least 1".into());
        }
        Ok(())
    }
}

/// One control step with the latest sensor bit. The switch to Follow fires
/// once the detection mean has stayed at or below 0.5 for `search_confirm`
/// consecutive steps; the switching step already emits the follow command.
pub fn step(
    state: &WallFollowerState,
    s: bool,
    params: &WallFollowerParams,
) -> (WallFollowerState, VelocityCommand) {
    let mut next = *state;
    let bit = if s { 1.0 } else { 0.0 };
    next.mu_d = params.a_mu * next.mu_d + (1.0 - params.a_mu) * bit;

    if next.mode == Mode::Search {
        if next.mu_d > 0.5 {
            next.confirm = 0;
        } else {
            next.confirm += 1;
            if next.confirm >= params.search_confirm {
                next.mode = Mode::Follow;
            }
        }
    }

    let cmd = match next.mode {
        Mode::Search => VelocityCommand::new(params.v0, 0.0),
        Mode::Follow => {
            let d = 2.0 * (0.5 - next.mu_d);
            next.v_rel = params.a_v * next.v_rel + (1.0 - params.a_v) * (1.0 - d.abs());
            let phase = TAU * (next.k % params.counter_k as u64) as f64 / params.counter_k as f64;
            VelocityCommand::new(
                next.v_rel * params.v0,
                0.5 * (d + phase.cos()) * params.omega0,
            )
        }
    };
    next.k += 1;
    (next, cmd)
}
