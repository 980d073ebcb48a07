//! Run configuration: flat key-value files with dotted keys, merged in the
//! order defaults <- config file <- explicit overrides. The manifest written
//! by every campaign is a config file in the same format, so a run can be
//! reproduced byte-for-byte from its manifest.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::land_nav::LandNavParams;
use crate::motion::MotionNoiseParams;
use crate::wall_follower::WallFollowerParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("config line {0}: expected `key = value`, got {1:?}")]
    Syntax(usize, String),
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing required key `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Campaign {
    WallSweep,
    LandnavHist,
    SearchHist,
}

impl Campaign {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wall-sweep" => Some(Self::WallSweep),
            "landnav-hist" => Some(Self::LandnavHist),
            "search-hist" => Some(Self::SearchHist),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::WallSweep => "wall-sweep",
            Self::LandnavHist => "landnav-hist",
            Self::SearchHist => "search-hist",
        }
    }
}

/// Particle-filter configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfConfig {
    pub n_particles: usize,
    pub w_hat: f64,
    pub sigma_phi_max: f64,
    pub resample_ratio: f64,
    /// Wall-following distance per filter attempt, in circumferences, before
    /// the pipeline restarts at land navigation.
    pub restart_timeout: f64,
    /// Seeding standard deviation for x and y, meters.
    pub sigma_xy: f64,
    /// Seeding standard deviation for the heading, radians.
    pub sigma_phi: f64,
}

impl Default for PfConfig {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            w_hat: 0.75,
            sigma_phi_max: 0.2,
            resample_ratio: 0.5,
            restart_timeout: 1.5,
            sigma_xy: 0.31,
            sigma_phi: 0.82,
        }
    }
}

/// Parameter grid for the wall-follower sweep campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub a_mu_values: Vec<f64>,
    pub a_v_values: Vec<f64>,
    pub noise_values: Vec<f64>,
    pub trials: usize,
    pub max_loop_time_s: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            a_mu_values: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            a_v_values: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            noise_values: vec![0.0, 0.2, 0.4],
            trials: 10,
            max_loop_time_s: 1200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub bin_width: f64,
    /// Campaign failure fraction above which the CLI exits with code 1.
    pub max_failure_frac: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.05,
            max_failure_frac: 0.1,
        }
    }
}

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub map_path: Option<String>,
    pub campaign: Campaign,
    pub trials: usize,
    pub seed: u64,
    /// Control frequency, Hz; the step time is 1/f.
    pub control_hz: f64,
    pub max_time_s: f64,
    /// Total wall-following distance after the first seed, in circumferences,
    /// before a trial counts as failed.
    pub pf_timeout_loops: f64,
    pub task_phase: bool,
    pub arm_dx: f64,
    pub arm_dy: f64,
    pub sensor_noise: f64,
    pub motion: MotionNoiseParams,
    pub wall_follower: WallFollowerParams,
    pub land_nav: LandNavParams,
    pub pf: PfConfig,
    pub sweep: SweepConfig,
    pub report: ReportConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            map_path: None,
            campaign: Campaign::LandnavHist,
            trials: 100,
            seed: 1,
            control_hz: 20.0,
            max_time_s: 3600.0,
            pf_timeout_loops: 3.0,
            task_phase: false,
            arm_dx: 0.3,
            arm_dy: 0.0,
            sensor_noise: 0.1,
            motion: MotionNoiseParams::viking_mi_422p(),
            wall_follower: WallFollowerParams::default(),
            land_nav: LandNavParams::map1(),
            pf: PfConfig::default(),
            sweep: SweepConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        reason: format!("cannot parse {value:?}"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            reason: format!("expected a boolean, got {other:?}"),
        }),
    }
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let items: Result<Vec<f64>, _> = value
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect();
    items.map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        reason: format!("expected a comma-separated number list, got {value:?}"),
    })
}

fn fmt_f64_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl SimConfig {
    /// Applies one dotted-key assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "map" => self.map_path = Some(v.to_string()),
            "campaign" => {
                self.campaign = Campaign::parse(v).ok_or_else(|| ConfigError::InvalidValue {
                    key: key.into(),
                    reason: format!(
                        "expected wall-sweep | landnav-hist | search-hist, got {v:?}"
                    ),
                })?
            }
            "trials" => self.trials = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "sim.f" => self.control_hz = parse_num(key, v)?,
            "sim.max_time_s" => self.max_time_s = parse_num(key, v)?,
            "sim.pf_timeout_loops" => self.pf_timeout_loops = parse_num(key, v)?,
            "sim.task_phase" => self.task_phase = parse_bool(key, v)?,
            "sensor.arm_dx" => self.arm_dx = parse_num(key, v)?,
            "sensor.arm_dy" => self.arm_dy = parse_num(key, v)?,
            "sensor.noise" => self.sensor_noise = parse_num(key, v)?,
            "motion.preset" => match v {
                "viking-mi-422p" => self.motion = MotionNoiseParams::viking_mi_422p(),
                "noise-free" => self.motion = MotionNoiseParams::noise_free(),
                other => {
                    return Err(ConfigError::InvalidValue {
                        key: key.into(),
                        reason: format!("unknown motion preset {other:?}"),
                    })
                }
            },
            "motion.v_alpha1" => self.motion.velocity.a1 = parse_num(key, v)?,
            "motion.v_alpha2" => self.motion.velocity.a2 = parse_num(key, v)?,
            "motion.v_alpha3" => self.motion.velocity.a3 = parse_num(key, v)?,
            "motion.v_alpha4" => self.motion.velocity.a4 = parse_num(key, v)?,
            "motion.v_alpha5" => self.motion.velocity.a5 = parse_num(key, v)?,
            "motion.v_alpha6" => self.motion.velocity.a6 = parse_num(key, v)?,
            "motion.o_alpha1" => self.motion.odometry.a1 = parse_num(key, v)?,
            "motion.o_alpha2" => self.motion.odometry.a2 = parse_num(key, v)?,
            "motion.o_alpha3" => self.motion.odometry.a3 = parse_num(key, v)?,
            "motion.o_alpha4" => self.motion.odometry.a4 = parse_num(key, v)?,
            "wall_follower.K" => self.wall_follower.counter_k = parse_num(key, v)?,
            "wall_follower.search_confirm" => {
                self.wall_follower.search_confirm = parse_num(key, v)?
            }
            "wall_follower.a_mu" => self.wall_follower.a_mu = parse_num(key, v)?,
            "wall_follower.a_v" => self.wall_follower.a_v = parse_num(key, v)?,
            "wall_follower.v0" => self.wall_follower.v0 = parse_num(key, v)?,
            "wall_follower.omega0" => self.wall_follower.omega0 = parse_num(key, v)?,
            "land_nav.preset" => match v {
                "map1" => {
                    let n = self.land_nav.n_samples;
                    self.land_nav = LandNavParams::map1();
                    self.land_nav.n_samples = n;
                }
                "map2" => {
                    let n = self.land_nav.n_samples;
                    self.land_nav = LandNavParams::map2();
                    self.land_nav.n_samples = n;
                }
                other => {
                    return Err(ConfigError::InvalidValue {
                        key: key.into(),
                        reason: format!("unknown land_nav preset {other:?}"),
                    })
                }
            },
            "land_nav.L_min" => self.land_nav.l_min = parse_num(key, v)?,
            "land_nav.e_max" => self.land_nav.e_max = parse_num(key, v)?,
            "land_nav.c_min" => self.land_nav.c_min = parse_num(key, v)?,
            "land_nav.U_min" => self.land_nav.u_min = parse_num(key, v)?,
            "land_nav.N" => self.land_nav.n_samples = parse_num(key, v)?,
            "pf.n_particles" => self.pf.n_particles = parse_num(key, v)?,
            "pf.w_hat" => self.pf.w_hat = parse_num(key, v)?,
            "pf.sigma_phi_max" => self.pf.sigma_phi_max = parse_num(key, v)?,
            "pf.resample_ratio" => self.pf.resample_ratio = parse_num(key, v)?,
            "pf.restart_timeout" => self.pf.restart_timeout = parse_num(key, v)?,
            "pf.sigma_xy" => self.pf.sigma_xy = parse_num(key, v)?,
            "pf.sigma_phi" => self.pf.sigma_phi = parse_num(key, v)?,
            "sweep.a_mu_values" => self.sweep.a_mu_values = parse_f64_list(key, v)?,
            "sweep.a_v_values" => self.sweep.a_v_values = parse_f64_list(key, v)?,
            "sweep.noise_values" => self.sweep.noise_values = parse_f64_list(key, v)?,
            "sweep.trials" => self.sweep.trials = parse_num(key, v)?,
            "sweep.max_loop_time_s" => self.sweep.max_loop_time_s = parse_num(key, v)?,
            "report.bin_width" => self.report.bin_width = parse_num(key, v)?,
            "report.max_failure_frac" => self.report.max_failure_frac = parse_num(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Merges a config file into this configuration.
    pub fn merge_file(&mut self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        self.merge_str(&text)
    }

    pub fn merge_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax(lineno + 1, raw.to_string()))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Range checks on every parameter, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| ConfigError::InvalidValue {
            key: key.into(),
            reason,
        };
        if !(0.0..=1.0).contains(&self.sensor_noise) {
            return Err(bad(
                "sensor.noise",
                format!("must lie in [0, 1], got {}", self.sensor_noise),
            ));
        }
        if self.arm_dx == 0.0 && self.arm_dy == 0.0 {
            return Err(bad(
                "sensor.arm_dx",
                "lever arm must be nonzero so rotations move the sensor".into(),
            ));
        }
        if !(self.control_hz > 0.0) {
            return Err(bad("sim.f", format!("must be positive, got {}", self.control_hz)));
        }
        if !(self.max_time_s > 0.0) {
            return Err(bad("sim.max_time_s", "must be positive".into()));
        }
        if !(self.pf_timeout_loops > 0.0) {
            return Err(bad("sim.pf_timeout_loops", "must be positive".into()));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1".into()));
        }
        let alphas = [
            ("motion.v_alpha1", self.motion.velocity.a1),
            ("motion.v_alpha2", self.motion.velocity.a2),
            ("motion.v_alpha3", self.motion.velocity.a3),
            ("motion.v_alpha4", self.motion.velocity.a4),
            ("motion.v_alpha5", self.motion.velocity.a5),
            ("motion.v_alpha6", self.motion.velocity.a6),
            ("motion.o_alpha1", self.motion.odometry.a1),
            ("motion.o_alpha2", self.motion.odometry.a2),
            ("motion.o_alpha3", self.motion.odometry.a3),
            ("motion.o_alpha4", self.motion.odometry.a4),
        ];
        for (key, a) in alphas {
            if !(a >= 0.0) {
                return Err(bad(key, format!("must be non-negative, got {a}")));
            }
        }
        self.wall_follower.validate().map_err(|reason| {
            ConfigError::InvalidValue {
                key: "wall_follower".into(),
                reason,
            }
        })?;
        self.land_nav
            .validate()
            .map_err(|reason| ConfigError::InvalidValue {
                key: "land_nav".into(),
                reason,
            })?;
        if self.pf.n_particles == 0 {
            return Err(bad("pf.n_particles", "must be at least 1".into()));
        }
        if !(self.pf.w_hat > 0.5 && self.pf.w_hat < 1.0) {
            return Err(bad(
                "pf.w_hat",
                format!("must lie in (0.5, 1), got {}", self.pf.w_hat),
            ));
        }
        if !(self.pf.sigma_phi_max > 0.0) {
            return Err(bad("pf.sigma_phi_max", "must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pf.resample_ratio) {
            return Err(bad("pf.resample_ratio", "must lie in [0, 1]".into()));
        }
        if !(self.pf.restart_timeout > 0.0) {
            return Err(bad("pf.restart_timeout", "must be positive".into()));
        }
        if !(self.pf.sigma_xy > 0.0) || !(self.pf.sigma_phi > 0.0) {
            return Err(bad("pf.sigma_xy", "seeding stds must be positive".into()));
        }
        if !(self.report.bin_width > 0.0) {
            return Err(bad("report.bin_width", "must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.report.max_failure_frac) {
            return Err(bad("report.max_failure_frac", "must lie in [0, 1]".into()));
        }
        for (key, vs) in [
            ("sweep.a_mu_values", &self.sweep.a_mu_values),
            ("sweep.a_v_values", &self.sweep.a_v_values),
        ] {
            if vs.is_empty() || vs.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                return Err(bad(key, "rates must lie in (0, 1)".into()));
            }
        }
        if self
            .sweep
            .noise_values
            .iter()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(bad("sweep.noise_values", "noise must lie in [0, 1]".into()));
        }
        if self.sweep.trials == 0 {
            return Err(bad("sweep.trials", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn require_map_path(&self) -> Result<&str, ConfigError> {
        self.map_path
            .as_deref()
            .ok_or_else(|| ConfigError::Missing("map".into()))
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.control_hz
    }

    /// Serializes the fully resolved configuration as a config file. Parsing
    /// the result reproduces this configuration exactly.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("campaign", self.campaign.name().into());
        if let Some(map) = &self.map_path {
            kv("map", map.clone());
        }
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        kv("land_nav.L_min", self.land_nav.l_min.to_string());
        kv("land_nav.N", self.land_nav.n_samples.to_string());
        kv("land_nav.U_min", self.land_nav.u_min.to_string());
        kv("land_nav.c_min", self.land_nav.c_min.to_string());
        kv("land_nav.e_max", self.land_nav.e_max.to_string());
        kv("motion.o_alpha1", self.motion.odometry.a1.to_string());
        kv("motion.o_alpha2", self.motion.odometry.a2.to_string());
        kv("motion.o_alpha3", self.motion.odometry.a3.to_string());
        kv("motion.o_alpha4", self.motion.odometry.a4.to_string());
        kv("motion.v_alpha1", self.motion.velocity.a1.to_string());
        kv("motion.v_alpha2", self.motion.velocity.a2.to_string());
        kv("motion.v_alpha3", self.motion.velocity.a3.to_string());
        kv("motion.v_alpha4", self.motion.velocity.a4.to_string());
        kv("motion.v_alpha5", self.motion.velocity.a5.to_string());
        kv("motion.v_alpha6", self.motion.velocity.a6.to_string());
        kv("pf.n_particles", self.pf.n_particles.to_string());
        kv("pf.resample_ratio", self.pf.resample_ratio.to_string());
        kv("pf.restart_timeout", self.pf.restart_timeout.to_string());
        kv("pf.sigma_phi", self.pf.sigma_phi.to_string());
        kv("pf.sigma_phi_max", self.pf.sigma_phi_max.to_string());
        kv("pf.sigma_xy", self.pf.sigma_xy.to_string());
        kv("pf.w_hat", self.pf.w_hat.to_string());
        kv("report.bin_width", self.report.bin_width.to_string());
        kv("report.max_failure_frac", self.report.max_failure_frac.to_string());
        kv("sensor.arm_dx", self.arm_dx.to_string());
        kv("sensor.arm_dy", self.arm_dy.to_string());
        kv("sensor.noise", self.sensor_noise.to_string());
        kv("sim.f", self.control_hz.to_string());
        kv("sim.max_time_s", self.max_time_s.to_string());
        kv("sim.pf_timeout_loops", self.pf_timeout_loops.to_string());
        kv("sim.task_phase", self.task_phase.to_string());
        kv("sweep.a_mu_values", fmt_f64_list(&self.sweep.a_mu_values));
        kv("sweep.a_v_values", fmt_f64_list(&self.sweep.a_v_values));
        kv("sweep.max_loop_time_s", self.sweep.max_loop_time_s.to_string());
        kv("sweep.noise_values", fmt_f64_list(&self.sweep.noise_values));
        kv("sweep.trials", self.sweep.trials.to_string());
        kv("wall_follower.K", self.wall_follower.counter_k.to_string());
        kv("wall_follower.a_mu", self.wall_follower.a_mu.to_string());
        kv("wall_follower.a_v", self.wall_follower.a_v.to_string());
        kv("wall_follower.omega0", self.wall_follower.omega0.to_string());
        kv(
            "wall_follower.search_confirm",
            self.wall_follower.search_confirm.to_string(),
        );
        kv("wall_follower.v0", self.wall_follower.v0.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let mut cfg = SimConfig::default();
        let err = cfg.set("pf.bogus", "1").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(k) if k == "pf.bogus"));
    }

    #[test]
    fn out_of_range_noise_names_the_key() {
        let mut cfg = SimConfig::default();
        cfg.set("sensor.noise", "1.5").unwrap();
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sensor.noise"), "{msg}");
    }

    #[test]
    fn merge_str_applies_values_and_comments() {
        let mut cfg = SimConfig::default();
        cfg.merge_str(
            "# comment\npf.n_particles = 500\nwall_follower.a_mu = 0.5 # inline\n\nseed = 42\n",
        )
        .unwrap();
        assert_eq!(cfg.pf.n_particles, 500);
        assert_eq!(cfg.wall_follower.a_mu, 0.5);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn presets_apply_trained_parameters() {
        let mut cfg = SimConfig::default();
        cfg.set("land_nav.preset", "map2").unwrap();
        assert_eq!(cfg.land_nav.c_min, 0.3);
        assert_eq!(cfg.land_nav.u_min, 0.4);
        assert_eq!(cfg.land_nav.l_min, 0.5);
        assert_eq!(cfg.land_nav.e_max, 0.01);
        cfg.set("motion.preset", "noise-free").unwrap();
        assert_eq!(cfg.motion.velocity.a1, 0.0);
    }

    #[test]
    fn manifest_round_trips() {
        let mut cfg = SimConfig::default();
        cfg.set("map", "fixtures/map1.txt").unwrap();
        cfg.set("seed", "7").unwrap();
        cfg.set("sensor.noise", "0.4").unwrap();
        cfg.set("sweep.a_mu_values", "0.2, 0.7").unwrap();
        let manifest = cfg.to_manifest();
        let mut round = SimConfig::default();
        round.merge_str(&manifest).unwrap();
        assert_eq!(cfg, round);
        assert_eq!(round.to_manifest(), manifest);
    }

    #[test]
    fn syntax_error_reports_line() {
        let mut cfg = SimConfig::default();
        let err = cfg.merge_str("seed = 1\nnot a line\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(2, _)));
    }
}
