//! Closed-loop simulation: ground truth propagated with the velocity motion
//! model, odometry corrupted with the odometry model, the binary sensor, the
//! wall follower, land navigation and the particle-filter search, plus the
//! experiment campaigns built on top.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Campaign, ConfigError, SimConfig};
use crate::geometry::{MapError, PolygonMap, Vec2};
use crate::land_nav::{try_match, DominantPointTrack, PoseEstimate};
use crate::motion::{
    sample_odometry_motion, sample_velocity_motion, sensor_position, LeverArm, Pose,
    VelocityCommand,
};
use crate::particle_filter::{ParticleSet, SeedStds};
use crate::sensing::{measure, BinarySensorConfig, WeightParam};
use crate::stats::{angle_error, histogram, mean, std_dev, wrap_to_pi, HistogramBin};
use crate::wall_follower::{self, Mode, WallFollowerState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("campaign produced no records to report on")]
    NoRecords,
}

/// What a single trial runs to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialMode {
    /// Wall following only; stops once the first boundary loop completes.
    WallFollowOnly,
    /// Stops at the first land-navigation estimate.
    LandNavOnly,
    /// Land navigation followed by the particle-filter search.
    FullPipeline,
}

#[derive(Debug, Clone, Copy)]
pub struct TrialOptions {
    pub mode: TrialMode,
    pub record_trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub true_pose: Pose,
    pub odom_pose: Pose,
    pub s: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandNavOutcome {
    pub estimate: PoseEstimate,
    /// Simulation time of the first estimate, seconds.
    pub t: f64,
    /// Position error against ground truth at estimate time, meters.
    pub dx: f64,
    /// Heading error against ground truth at estimate time, radians.
    pub dphi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    /// Simulation time of convergence, seconds.
    pub t: f64,
    pub pose: Pose,
    pub dx: f64,
    pub dphi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopMetrics {
    /// Mean squared sensor-to-boundary distance over the first loop, m^2.
    pub mse: f64,
    /// Circumference divided by the loop duration, m/s.
    pub v_mean: f64,
    pub duration: f64,
    /// Distance between the sensor positions at loop completion and at the
    /// boundary entry point, meters.
    pub closure_distance: f64,
}

/// Uncertainty of the particle cloud around a task excursion away from the
/// boundary: it grows off-boundary and contracts once boundary measurements
/// resume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskPhaseStats {
    pub pos_std_at_convergence: f64,
    pub pos_std_at_waypoint: f64,
    pub pos_std_after_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub start: Pose,
    pub land_nav: Option<LandNavOutcome>,
    /// Present iff the particle filter converged.
    pub search: Option<SearchOutcome>,
    pub restarts: u32,
    pub loop_metrics: Option<LoopMetrics>,
    pub dp_events: Vec<(f64, Vec2)>,
    pub trace: Option<Vec<TraceRow>>,
    pub task: Option<TaskPhaseStats>,
    pub sim_time: f64,
}

/// Wraps an arclength difference into `(-u/2, u/2]`.
fn wrap_arc(d: f64, u: f64) -> f64 {
    let r = d.rem_euclid(u);
    if r > u / 2.0 {
        r - u
    } else {
        r
    }
}

struct LoopTracker {
    prev_arc: f64,
    progress: f64,
    mse_sum: f64,
    steps: u64,
    started_at: f64,
    start_sensor: Vec2,
}

impl LoopTracker {
    fn start(arc: f64, t: f64, sensor: Vec2) -> Self {
        Self {
            prev_arc: arc,
            progress: 0.0,
            mse_sum: 0.0,
            steps: 0,
            started_at: t,
            start_sensor: sensor,
        }
    }
}

/// Uniform random pose over the map interior.
pub fn sample_interior_pose<R: Rng + ?Sized>(map: &PolygonMap, rng: &mut R) -> Pose {
    let (min, max) = map.bounding_box();
    loop {
        let p = Vec2::new(rng.gen_range(min.x..max.x), rng.gen_range(min.y..max.y));
        if map.contains(p) {
            return Pose::new(p.x, p.y, rng.gen_range(-PI..PI));
        }
    }
}

fn sample_waypoint<R: Rng + ?Sized>(map: &PolygonMap, rng: &mut R, clearance: f64) -> Vec2 {
    let (min, max) = map.bounding_box();
    let mut fallback = None;
    for _ in 0..10_000 {
        let p = Vec2::new(rng.gen_range(min.x..max.x), rng.gen_range(min.y..max.y));
        if map.contains(p) {
            if map.closest_boundary(p).distance > clearance {
                return p;
            }
            fallback.get_or_insert(p);
        }
    }
    fallback.unwrap_or(Vec2::new((min.x + max.x) / 2.0, (min.y + max.y) / 2.0))
}

/// Proportional steering toward a waypoint.
fn steer_to(target: Vec2, pose: &Pose, v0: f64, omega0: f64) -> VelocityCommand {
    let err = wrap_to_pi((target - pose.position()).heading() - pose.phi);
    let omega = (2.0 * err).clamp(-omega0, omega0);
    let v = if err.abs() < 0.5 { v0 } else { 0.15 * v0 };
    VelocityCommand::new(v, omega)
}

enum TaskState {
    Outbound { waypoint: Vec2 },
    Inbound { home: Vec2 },
    PostReturn { until: f64 },
}

/// Runs one deterministic trial. Everything stochastic draws from a single
/// ChaCha stream seeded with `seed`, so identical inputs give bit-identical
/// records.
pub fn run_trial(
    cfg: &SimConfig,
    map: &PolygonMap,
    seed: u64,
    opts: &TrialOptions,
) -> TrialRecord {
    let dt = cfg.dt();
    let u = map.circumference();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arm = LeverArm::new(cfg.arm_dx, cfg.arm_dy);
    let sensor_cfg = BinarySensorConfig::new(cfg.sensor_noise).expect("config validated");
    let w_hat = WeightParam::new(cfg.pf.w_hat).expect("config validated");
    let seed_stds = SeedStds {
        sigma_x: cfg.pf.sigma_xy,
        sigma_y: cfg.pf.sigma_xy,
        sigma_phi: cfg.pf.sigma_phi,
    };

    let start = sample_interior_pose(map, &mut rng);
    let mut true_pose = start;
    let mut odom_pose = start; // odometry error at step 0 is zero
    let mut wf = WallFollowerState::new();
    let mut track: Option<DominantPointTrack> = None;
    let mut pf: Option<ParticleSet> = None;
    let mut loop_tracker: Option<LoopTracker> = None;
    let mut task: Option<TaskState> = None;

    let mut record = TrialRecord {
        seed,
        start,
        land_nav: None,
        search: None,
        restarts: 0,
        loop_metrics: None,
        dp_events: Vec::new(),
        trace: opts.record_trace.then(Vec::new),
        task: None,
        sim_time: 0.0,
    };

    let mut seeded_once = false;
    let mut dist_since_first_seed = 0.0;
    let mut dist_this_attempt = 0.0;
    let mut restarts = 0u32;

    let max_steps = (cfg.max_time_s / dt).ceil() as u64;
    let mut t = 0.0;

    'sim: for _ in 0..=max_steps {
        let sensor_pos = sensor_position(&true_pose, &arm);
        let s = measure(map, sensor_pos, &sensor_cfg, &mut rng);
        if let Some(trace) = &mut record.trace {
            trace.push(TraceRow {
                t,
                true_pose,
                odom_pose,
                s,
            });
        }

        // First-loop wall-following metrics.
        if record.loop_metrics.is_none() {
            if let Some(lt) = &mut loop_tracker {
                let cb = map.closest_boundary(sensor_pos);
                lt.progress += wrap_arc(cb.arclength - lt.prev_arc, u);
                lt.prev_arc = cb.arclength;
                lt.mse_sum += cb.distance * cb.distance;
                lt.steps += 1;
                if lt.progress.abs() >= u {
                    let duration = t - lt.started_at;
                    record.loop_metrics = Some(LoopMetrics {
                        mse: lt.mse_sum / lt.steps as f64,
                        v_mean: u / duration,
                        duration,
                        closure_distance: sensor_pos.distance(lt.start_sensor),
                    });
                    if opts.mode == TrialMode::WallFollowOnly {
                        break 'sim;
                    }
                }
            }
        }

        // Particle-filter measurement update and convergence test.
        let mut converged_now = false;
        if let Some(set) = &mut pf {
            set.update_weights(map, s, &arm, w_hat);
            set.resample_if_needed(cfg.pf.resample_ratio, &mut rng);
            if task.is_none() && set.converged(cfg.pf.sigma_phi_max) {
                let est = set.estimate();
                record.search = Some(SearchOutcome {
                    t,
                    pose: est,
                    dx: est.distance(&true_pose),
                    dphi: angle_error(est.phi, true_pose.phi),
                });
                converged_now = true;
            }
        }
        if converged_now {
            if cfg.task_phase && opts.mode == TrialMode::FullPipeline {
                let set = pf.as_ref().unwrap();
                record.task = Some(TaskPhaseStats {
                    pos_std_at_convergence: set.position_std(),
                    pos_std_at_waypoint: f64::NAN,
                    pos_std_after_return: f64::INFINITY,
                });
                task = Some(TaskState::Outbound {
                    waypoint: sample_waypoint(map, &mut rng, 1.0),
                });
            } else {
                break 'sim;
            }
        }

        // Control.
        let cmd = match &mut task {
            None => {
                let prev_mode = wf.mode;
                let (next, cmd) = wall_follower::step(&wf, s, &cfg.wall_follower);
                wf = next;
                if prev_mode == Mode::Search && wf.mode == Mode::Follow {
                    // First boundary contact: start path integration and the
                    // loop metric from here.
                    track = Some(DominantPointTrack::new(
                        odom_pose.position(),
                        &cfg.land_nav,
                        u,
                    ));
                    let cb = map.closest_boundary(sensor_pos);
                    loop_tracker = Some(LoopTracker::start(cb.arclength, t, sensor_pos));
                } else if let Some(tk) = &mut track {
                    if let Some(dp) = tk.update(odom_pose.position()) {
                        record.dp_events.push((t, dp));
                        if pf.is_none() && opts.mode != TrialMode::WallFollowOnly {
                            if let Some(est) = try_match(tk, map, &cfg.land_nav) {
                                if record.land_nav.is_none() {
                                    record.land_nav = Some(LandNavOutcome {
                                        estimate: est,
                                        t,
                                        dx: est.position.distance(true_pose.position()),
                                        dphi: angle_error(est.phi, true_pose.phi),
                                    });
                                }
                                if opts.mode == TrialMode::LandNavOnly {
                                    break 'sim;
                                }
                                pf = Some(ParticleSet::seed(
                                    &est,
                                    &seed_stds,
                                    cfg.pf.n_particles,
                                    &mut rng,
                                ));
                                seeded_once = true;
                                dist_this_attempt = 0.0;
                            }
                        }
                    }
                }
                cmd
            }
            Some(TaskState::Outbound { waypoint }) => {
                let wp = *waypoint;
                if true_pose.position().distance(wp) < 0.3 {
                    if let (Some(stats), Some(set)) = (&mut record.task, &pf) {
                        stats.pos_std_at_waypoint = set.position_std();
                    }
                    let home = record.search.unwrap().pose.position();
                    task = Some(TaskState::Inbound { home });
                    steer_to(home, &true_pose, cfg.wall_follower.v0, cfg.wall_follower.omega0)
                } else {
                    steer_to(wp, &true_pose, cfg.wall_follower.v0, cfg.wall_follower.omega0)
                }
            }
            Some(TaskState::Inbound { home }) => {
                let home = *home;
                if true_pose.position().distance(home) < 0.5 {
                    task = Some(TaskState::PostReturn { until: t + 45.0 });
                    let (next, cmd) = wall_follower::step(&wf, s, &cfg.wall_follower);
                    wf = next;
                    cmd
                } else {
                    steer_to(home, &true_pose, cfg.wall_follower.v0, cfg.wall_follower.omega0)
                }
            }
            Some(TaskState::PostReturn { until }) => {
                if let (Some(stats), Some(set)) = (&mut record.task, &pf) {
                    stats.pos_std_after_return = stats.pos_std_after_return.min(set.position_std());
                }
                if t >= *until {
                    break 'sim;
                }
                let (next, cmd) = wall_follower::step(&wf, s, &cfg.wall_follower);
                wf = next;
                cmd
            }
        };

        // Advance ground truth, then corrupt the true increment into odometry.
        let prev_true = true_pose;
        true_pose = sample_velocity_motion(&true_pose, &cmd, dt, &cfg.motion.velocity, &mut rng);
        let prev_odom = odom_pose;
        odom_pose = sample_odometry_motion(
            &odom_pose,
            &prev_true,
            &true_pose,
            &cfg.motion.odometry,
            &mut rng,
        );

        if let Some(set) = &mut pf {
            set.predict(&prev_odom, &odom_pose, &cfg.motion.odometry, &mut rng);
        }
        if seeded_once && task.is_none() {
            let d = prev_odom.distance(&odom_pose);
            dist_since_first_seed += d;
            if pf.is_some() {
                dist_this_attempt += d;
            }
            if dist_since_first_seed > cfg.pf_timeout_loops * u {
                break 'sim; // systematic search failed
            }
            if pf.is_some() && dist_this_attempt > cfg.pf.restart_timeout * u {
                // Restart the pipeline at land navigation.
                pf = None;
                restarts += 1;
            }
        }
        t += dt;
    }

    record.sim_time = t;
    record.restarts = restarts;
    record
}

/// Per-trial summary row, the unit of `trials.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    pub dx: Option<f64>,
    pub dphi: Option<f64>,
    pub t_estimate: Option<f64>,
    /// None when the campaign never ran the particle filter.
    pub converged: Option<bool>,
    pub mse: Option<f64>,
    pub v_mean: Option<f64>,
    pub pf_dx: Option<f64>,
    pub pf_dphi: Option<f64>,
    pub t_converged: Option<f64>,
    pub restarts: u32,
}

impl TrialRow {
    pub fn from_record(record: &TrialRecord, ran_pf: bool) -> Self {
        Self {
            seed: record.seed,
            dx: record.land_nav.map(|o| o.dx),
            dphi: record.land_nav.map(|o| o.dphi),
            t_estimate: record.land_nav.map(|o| o.t),
            converged: ran_pf.then_some(record.search.is_some()),
            mse: record.loop_metrics.map(|m| m.mse),
            v_mean: record.loop_metrics.map(|m| m.v_mean),
            pf_dx: record.search.map(|o| o.dx),
            pf_dphi: record.search.map(|o| o.dphi),
            t_converged: record.search.map(|o| o.t),
            restarts: record.restarts,
        }
    }
}

/// One cell of the wall-follower parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub a_mu: f64,
    pub a_v: f64,
    pub noise: f64,
    pub trials: usize,
    pub completed: usize,
    pub mse_mean: Option<f64>,
    pub v_mean_mean: Option<f64>,
}

/// Everything a campaign produces, kept in memory so reruns can be compared
/// byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutput {
    /// File name -> file contents, including the manifest.
    pub files: Vec<(String, String)>,
    pub summary: Vec<(String, String)>,
    pub failure_frac: f64,
    /// True when the failure fraction exceeded `report.max_failure_frac`.
    pub threshold_exceeded: bool,
}

/// Seed of trial `index` under a campaign master seed.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    master ^ index as u64
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl Fn() -> T + Send) -> T {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("worker pool")
            .install(job),
        None => job(),
    }
}

/// Runs the configured campaign and renders its report files.
pub fn run_campaign(cfg: &SimConfig, workers: Option<usize>) -> Result<CampaignOutput, SimError> {
    cfg.validate()?;
    let map = PolygonMap::load(cfg.require_map_path()?)?;
    let mut output = match cfg.campaign {
        Campaign::WallSweep => run_wall_sweep(cfg, &map, workers),
        Campaign::LandnavHist => run_hist_campaign(cfg, &map, workers, TrialMode::LandNavOnly),
        Campaign::SearchHist => run_hist_campaign(cfg, &map, workers, TrialMode::FullPipeline),
    }?;
    output
        .files
        .push(("manifest".to_string(), cfg.to_manifest()));
    output.threshold_exceeded = output.failure_frac > cfg.report.max_failure_frac;
    Ok(output)
}

fn run_wall_sweep(
    cfg: &SimConfig,
    map: &PolygonMap,
    workers: Option<usize>,
) -> Result<CampaignOutput, SimError> {
    let mut cell_cfgs = Vec::new();
    for &a_mu in &cfg.sweep.a_mu_values {
        for &a_v in &cfg.sweep.a_v_values {
            for &noise in &cfg.sweep.noise_values {
                let mut c = cfg.clone();
                c.wall_follower.a_mu = a_mu;
                c.wall_follower.a_v = a_v;
                c.sensor_noise = noise;
                c.max_time_s = cfg.sweep.max_loop_time_s;
                cell_cfgs.push((a_mu, a_v, noise, c));
            }
        }
    }
    let trials = cfg.sweep.trials;
    let opts = TrialOptions {
        mode: TrialMode::WallFollowOnly,
        record_trace: false,
    };

    // Flat work list so rayon can balance across cells; order restored by index.
    let jobs: Vec<(usize, usize)> = (0..cell_cfgs.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let results: Vec<Option<LoopMetrics>> = run_pool(workers, || {
        jobs.par_iter()
            .map(|&(c, t)| {
                let record = run_trial(&cell_cfgs[c].3, map, trial_seed(cfg.seed, t), &opts);
                record.loop_metrics
            })
            .collect()
    });

    let mut cells = Vec::with_capacity(cell_cfgs.len());
    let mut total = 0usize;
    let mut completed_total = 0usize;
    for (c, &(a_mu, a_v, noise, _)) in cell_cfgs.iter().enumerate() {
        let cell_results = &results[c * trials..(c + 1) * trials];
        let done: Vec<&LoopMetrics> = cell_results.iter().flatten().collect();
        total += trials;
        completed_total += done.len();
        let mses: Vec<f64> = done.iter().map(|m| m.mse).collect();
        let vs: Vec<f64> = done.iter().map(|m| m.v_mean).collect();
        cells.push(SweepCell {
            a_mu,
            a_v,
            noise,
            trials,
            completed: done.len(),
            mse_mean: (!mses.is_empty()).then(|| mean(&mses)),
            v_mean_mean: (!vs.is_empty()).then(|| mean(&vs)),
        });
    }

    let failure_frac = 1.0 - completed_total as f64 / total.max(1) as f64;
    let summary = vec![
        ("campaign".into(), "wall-sweep".into()),
        ("cells".into(), cells.len().to_string()),
        ("trials".into(), total.to_string()),
        ("completed".into(), completed_total.to_string()),
        ("failure_frac".into(), failure_frac.to_string()),
    ];
    let files = vec![
        ("sweep.csv".to_string(), crate::report::sweep_csv(&cells)),
        (
            "summary.csv".to_string(),
            crate::report::summary_csv(&summary),
        ),
    ];
    Ok(CampaignOutput {
        files,
        summary,
        failure_frac,
        threshold_exceeded: false,
    })
}

fn run_hist_campaign(
    cfg: &SimConfig,
    map: &PolygonMap,
    workers: Option<usize>,
    mode: TrialMode,
) -> Result<CampaignOutput, SimError> {
    let opts = TrialOptions {
        mode,
        record_trace: false,
    };
    let records: Vec<TrialRecord> = run_pool(workers, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, map, trial_seed(cfg.seed, i), &opts))
            .collect()
    });
    if records.is_empty() {
        return Err(SimError::NoRecords);
    }
    let ran_pf = mode == TrialMode::FullPipeline;
    let rows: Vec<TrialRow> = records
        .iter()
        .map(|r| TrialRow::from_record(r, ran_pf))
        .collect();

    let with_estimate: Vec<&TrialRecord> =
        records.iter().filter(|r| r.land_nav.is_some()).collect();
    let dx: Vec<f64> = with_estimate
        .iter()
        .map(|r| r.land_nav.unwrap().dx)
        .collect();
    let dphi: Vec<f64> = with_estimate
        .iter()
        .map(|r| r.land_nav.unwrap().dphi)
        .collect();
    let t_est: Vec<f64> = with_estimate
        .iter()
        .map(|r| r.land_nav.unwrap().t)
        .collect();

    let mut summary: Vec<(String, String)> = vec![
        ("campaign".into(), cfg.campaign.name().into()),
        ("trials".into(), records.len().to_string()),
        ("estimates".into(), with_estimate.len().to_string()),
        ("mu_dx".into(), mean(&dx).to_string()),
        ("sigma_dx".into(), std_dev(&dx).to_string()),
        ("mu_dphi".into(), mean(&dphi).to_string()),
        ("sigma_dphi".into(), std_dev(&dphi).to_string()),
        ("mean_t_estimate".into(), mean(&t_est).to_string()),
    ];

    let failure_frac;
    let hist_dx_values;
    let hist_dphi_values;
    if ran_pf {
        let converged: Vec<&TrialRecord> = records.iter().filter(|r| r.search.is_some()).collect();
        let pf_dx: Vec<f64> = converged.iter().map(|r| r.search.unwrap().dx).collect();
        let pf_dphi: Vec<f64> = converged.iter().map(|r| r.search.unwrap().dphi).collect();
        let pf_t: Vec<f64> = converged.iter().map(|r| r.search.unwrap().t).collect();
        let failures = records.len() - converged.len();
        // Stability: fraction of all trials localized to within 0.3 m.
        let stable = records
            .iter()
            .filter(|r| r.search.is_some_and(|s| s.dx < 0.3))
            .count();
        failure_frac = failures as f64 / records.len() as f64;
        summary.extend([
            ("converged".into(), converged.len().to_string()),
            ("failures".into(), failures.to_string()),
            ("pf_mu_dx".into(), mean(&pf_dx).to_string()),
            ("pf_sigma_dx".into(), std_dev(&pf_dx).to_string()),
            ("pf_mu_dphi".into(), mean(&pf_dphi).to_string()),
            ("pf_sigma_dphi".into(), std_dev(&pf_dphi).to_string()),
            ("mean_t_converged".into(), mean(&pf_t).to_string()),
            (
                "stability".into(),
                (stable as f64 / records.len() as f64).to_string(),
            ),
        ]);
        hist_dx_values = pf_dx;
        hist_dphi_values = pf_dphi;
    } else {
        let stable = records
            .iter()
            .filter(|r| r.land_nav.is_some_and(|o| o.dx < 0.3))
            .count();
        failure_frac = 1.0 - with_estimate.len() as f64 / records.len() as f64;
        summary.extend([
            (
                "failures".into(),
                (records.len() - with_estimate.len()).to_string(),
            ),
            (
                "stability".into(),
                (stable as f64 / records.len() as f64).to_string(),
            ),
        ]);
        hist_dx_values = dx;
        hist_dphi_values = dphi;
    }

    let mut files = vec![
        ("trials.csv".to_string(), crate::report::trials_csv(&rows)),
        (
            "summary.csv".to_string(),
            crate::report::summary_csv(&summary),
        ),
    ];
    for (name, values) in [
        ("hist_dx.csv", &hist_dx_values),
        ("hist_dphi.csv", &hist_dphi_values),
    ] {
        if let Some(bins) = emit_histogram(values, cfg.report.bin_width) {
            files.push((name.to_string(), crate::report::histogram_csv(&bins)));
        }
    }

    Ok(CampaignOutput {
        files,
        summary,
        failure_frac,
        threshold_exceeded: false,
    })
}

/// Fixed-width histogram rows for a campaign report; `None` when there is
/// nothing to bin.
pub fn emit_histogram(values: &[f64], bin_width: f64) -> Option<Vec<HistogramBin>> {
    histogram(values, bin_width).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_map() -> PolygonMap {
        PolygonMap::from_vertices(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(13.0, 4.0),
            Vec2::new(13.0, 6.0),
            Vec2::new(7.0, 6.0),
            Vec2::new(7.0, 4.0),
            Vec2::new(5.0, 4.0),
            Vec2::new(5.0, 6.0),
            Vec2::new(0.0, 6.0),
        ])
        .unwrap()
    }

    fn base_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.map_path = Some("unused".into());
        cfg
    }

    #[test]
    fn interior_pose_sampling_stays_inside() {
        let map = test_map();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let pose = sample_interior_pose(&map, &mut rng);
            assert!(map.contains(pose.position()));
            assert!(pose.phi >= -PI && pose.phi < PI);
        }
    }

    #[test]
    fn trials_are_bit_identical_per_seed() {
        let map = test_map();
        let mut cfg = base_cfg();
        cfg.max_time_s = 60.0;
        let opts = TrialOptions {
            mode: TrialMode::FullPipeline,
            record_trace: true,
        };
        let a = run_trial(&cfg, &map, 123, &opts);
        let b = run_trial(&cfg, &map, 123, &opts);
        assert_eq!(a, b);
    }

    #[test]
    fn ground_truth_never_teleports() {
        let map = test_map();
        let mut cfg = base_cfg();
        cfg.max_time_s = 120.0;
        let opts = TrialOptions {
            mode: TrialMode::WallFollowOnly,
            record_trace: true,
        };
        let record = run_trial(&cfg, &map, 5, &opts);
        let trace = record.trace.unwrap();
        assert!(!trace.is_empty());
        // Bound: commanded speed plus six standard deviations of speed noise.
        let sigma_v = (cfg.motion.velocity.a1 * cfg.wall_follower.v0.powi(2)
            + cfg.motion.velocity.a2 * cfg.wall_follower.omega0.powi(2))
        .sqrt();
        let bound = (cfg.wall_follower.v0 + 6.0 * sigma_v) * cfg.dt();
        for w in trace.windows(2) {
            let step = w[0].true_pose.distance(&w[1].true_pose);
            assert!(step <= bound, "step {step} exceeds {bound}");
        }
    }

    #[test]
    fn odometry_starts_exact_and_drifts() {
        let map = test_map();
        let mut cfg = base_cfg();
        cfg.max_time_s = 200.0;
        let opts = TrialOptions {
            mode: TrialMode::WallFollowOnly,
            record_trace: true,
        };
        let record = run_trial(&cfg, &map, 9, &opts);
        let trace = record.trace.unwrap();
        let err =
            |row: &TraceRow| row.true_pose.distance(&row.odom_pose);
        assert_eq!(err(&trace[0]), 0.0);
        let early: f64 = trace[1..50].iter().map(|r| err(r)).sum::<f64>() / 49.0;
        let n = trace.len();
        let late: f64 = trace[n - 50..].iter().map(|r| err(r)).sum::<f64>() / 50.0;
        assert!(late > early, "drift should grow: early {early}, late {late}");
    }

    #[test]
    fn wall_follow_trial_completes_a_loop_with_finite_mse() {
        let map = test_map();
        let mut cfg = base_cfg();
        cfg.max_time_s = 900.0;
        let opts = TrialOptions {
            mode: TrialMode::WallFollowOnly,
            record_trace: false,
        };
        let record = run_trial(&cfg, &map, 2, &opts);
        let metrics = record.loop_metrics.expect("loop should complete");
        assert!(metrics.mse.is_finite() && metrics.mse > 0.0);
        assert!(metrics.v_mean > 0.0 && metrics.v_mean <= cfg.wall_follower.v0);
    }

    #[test]
    fn trial_seed_is_master_xor_index() {
        assert_eq!(trial_seed(7, 0), 7);
        assert_eq!(trial_seed(7, 3), 4);
    }

    #[test]
    fn wall_sweep_produces_one_cell_per_grid_point() {
        let map_file = write_test_map();
        let mut cfg = base_cfg();
        cfg.map_path = Some(map_file.path().to_str().unwrap().to_string());
        cfg.campaign = Campaign::WallSweep;
        cfg.sweep.a_mu_values = vec![0.5, 0.7];
        cfg.sweep.a_v_values = vec![0.7];
        cfg.sweep.noise_values = vec![0.0, 0.1];
        cfg.sweep.trials = 2;
        cfg.sweep.max_loop_time_s = 600.0;
        let out = run_campaign(&cfg, Some(2)).unwrap();
        let sweep = &out
            .files
            .iter()
            .find(|(n, _)| n == "sweep.csv")
            .unwrap()
            .1;
        // Header plus 2 * 1 * 2 cells.
        assert_eq!(sweep.lines().count(), 1 + 4);
        assert!(out.files.iter().any(|(n, _)| n == "manifest"));
    }

    fn write_test_map() -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for v in test_map().vertices() {
            writeln!(f, "{} {}", v.x, v.y).unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn campaign_outputs_are_deterministic() {
        let map_file = write_test_map();
        let mut cfg = base_cfg();
        cfg.map_path = Some(map_file.path().to_str().unwrap().to_string());
        cfg.campaign = Campaign::LandnavHist;
        cfg.trials = 3;
        cfg.max_time_s = 400.0;
        let a = run_campaign(&cfg, Some(2)).unwrap();
        let b = run_campaign(&cfg, None).unwrap();
        assert_eq!(a.files, b.files);
    }
}
