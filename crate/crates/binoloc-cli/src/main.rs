//! Command-line entry point: config parsing, campaign dispatch, map loading
//! and CSV emission.
//!
//! Exit codes: 0 success, 1 campaign failure threshold exceeded, 2 usage or
//! configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use binoloc::config::SimConfig;
use binoloc::geometry::PolygonMap;
use binoloc::report;
use binoloc::sim::{self, TrialMode, TrialOptions};

#[derive(Parser)]
#[command(
    name = "binoloc",
    about = "Global localization with odometry and a single binary inside/outside sensor",
    version,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment campaign and write CSV reports.
    Run(RunArgs),
    /// Run one wall-following trial and write its trace.
    Follow(TrialArgs),
    /// Run one trial up to the first land-navigation estimate.
    Match(TrialArgs),
    /// Run one full-pipeline trial (land navigation plus particle filter).
    Search(TrialArgs),
}

#[derive(Args)]
struct CommonOpts {
    /// Config file with `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Map file (plain `x y` lines or TOML with a vertices list).
    #[arg(long)]
    map: Option<String>,
    /// Master seed; the environment variable BINOLOC_SEED overrides it.
    #[arg(long)]
    seed: Option<u64>,
    /// Binary sensor noise factor in [0, 1].
    #[arg(long, value_name = "FRAC")]
    sensor_noise: Option<f64>,
    /// Particle weight for agreeing measurements, in (0.5, 1).
    #[arg(long, value_name = "W")]
    w_hat: Option<f64>,
    /// Detection-mean smoothing rate.
    #[arg(long, value_name = "RATE")]
    a_mu: Option<f64>,
    /// Velocity smoothing rate.
    #[arg(long, value_name = "RATE")]
    a_v: Option<f64>,
    /// Wiggle period in control steps.
    #[arg(long, value_name = "K")]
    counter_k: Option<u32>,
    /// Maximum linear velocity, m/s.
    #[arg(long)]
    v0: Option<f64>,
    /// Maximum angular velocity, rad/s.
    #[arg(long)]
    omega0: Option<f64>,
    /// Land-navigation parameter preset (map1 | map2).
    #[arg(long, value_name = "PRESET")]
    landnav_preset: Option<String>,
    /// Correlation-error threshold, radians.
    #[arg(long)]
    c_min: Option<f64>,
    /// Minimal stored path fraction of the circumference.
    #[arg(long)]
    u_min: Option<f64>,
    /// Particle count.
    #[arg(long)]
    n_particles: Option<usize>,
    /// Convergence threshold on the circular heading std, radians.
    #[arg(long)]
    sigma_phi_max: Option<f64>,
    /// Simulation time cap per trial, seconds.
    #[arg(long)]
    max_time: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print per-trial progress.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Campaign: wall-sweep | landnav-hist | search-hist.
    #[arg(long)]
    campaign: Option<String>,
    /// Trial count for histogram campaigns.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Write the full state trace as trace_<seed>.csv.
    #[arg(long)]
    trace: bool,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

/// Builds the configuration in precedence order:
/// defaults <- config file <- flags <- BINOLOC_SEED.
fn build_config(common: &CommonOpts, extra: &[(&str, Option<String>)]) -> Result<SimConfig, String> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &common.config {
        cfg.merge_file(path).map_err(|e| e.to_string())?;
    }
    let mut set = |key: &str, value: Option<String>| -> Result<(), String> {
        if let Some(v) = value {
            cfg.set(key, &v).map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    set("map", common.map.clone())?;
    set("seed", common.seed.map(|v| v.to_string()))?;
    set("sensor.noise", common.sensor_noise.map(|v| v.to_string()))?;
    set("pf.w_hat", common.w_hat.map(|v| v.to_string()))?;
    set("wall_follower.a_mu", common.a_mu.map(|v| v.to_string()))?;
    set("wall_follower.a_v", common.a_v.map(|v| v.to_string()))?;
    set("wall_follower.K", common.counter_k.map(|v| v.to_string()))?;
    set("wall_follower.v0", common.v0.map(|v| v.to_string()))?;
    set("wall_follower.omega0", common.omega0.map(|v| v.to_string()))?;
    set("land_nav.preset", common.landnav_preset.clone())?;
    set("land_nav.c_min", common.c_min.map(|v| v.to_string()))?;
    set("land_nav.U_min", common.u_min.map(|v| v.to_string()))?;
    set("pf.n_particles", common.n_particles.map(|v| v.to_string()))?;
    set(
        "pf.sigma_phi_max",
        common.sigma_phi_max.map(|v| v.to_string()),
    )?;
    set("sim.max_time_s", common.max_time.map(|v| v.to_string()))?;
    for (key, value) in extra {
        set(key, value.clone())?;
    }
    if let Ok(seed) = std::env::var("BINOLOC_SEED") {
        cfg.set("seed", &seed).map_err(|e| e.to_string())?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run_campaign_cmd(args: &RunArgs) -> ExitCode {
    let extra = [
        ("campaign", args.campaign.clone()),
        ("trials", args.trials.map(|v| v.to_string())),
    ];
    let cfg = match build_config(&args.common, &extra) {
        Ok(cfg) => cfg,
        Err(e) => return usage_error(e),
    };
    if let Err(e) = cfg.require_map_path() {
        return usage_error(e);
    }
    match sim::run_campaign(&cfg, args.workers) {
        Ok(output) => {
            if let Err(e) = report::write_campaign(&args.common.out, &output) {
                return usage_error(format!("writing output: {e}"));
            }
            for (k, v) in &output.summary {
                println!("{k} = {v}");
            }
            println!("wrote {} files to {}", output.files.len(), args.common.out.display());
            if output.threshold_exceeded {
                eprintln!(
                    "campaign failure fraction {:.3} exceeds report.max_failure_frac",
                    output.failure_frac
                );
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => usage_error(e),
    }
}

fn run_trial_cmd(args: &TrialArgs, mode: TrialMode) -> ExitCode {
    let cfg = match build_config(&args.common, &[]) {
        Ok(cfg) => cfg,
        Err(e) => return usage_error(e),
    };
    let map_path = match cfg.require_map_path() {
        Ok(p) => p.to_string(),
        Err(e) => return usage_error(e),
    };
    let map = match PolygonMap::load(&map_path) {
        Ok(m) => m,
        Err(e) => return usage_error(e),
    };
    if map.merged_duplicates() > 0 {
        eprintln!(
            "warning: merged {} duplicate vertices while loading {}",
            map.merged_duplicates(),
            map_path
        );
    }
    if args.common.verbose {
        eprintln!(
            "map {} with {} vertices, circumference {:.3} m",
            map_path,
            map.vertices().len(),
            map.circumference()
        );
    }
    let opts = TrialOptions {
        mode,
        record_trace: args.trace || mode == TrialMode::WallFollowOnly,
    };
    let record = sim::run_trial(&cfg, &map, cfg.seed, &opts);

    println!("seed = {}", record.seed);
    println!("sim_time = {}", record.sim_time);
    if let Some(m) = &record.loop_metrics {
        println!("loop_mse = {}", m.mse);
        println!("loop_v_mean = {}", m.v_mean);
        println!("loop_duration = {}", m.duration);
    }
    if let Some(o) = &record.land_nav {
        println!("estimate_vertex = {}", o.estimate.vertex);
        println!("estimate_x = {}", o.estimate.position.x);
        println!("estimate_y = {}", o.estimate.position.y);
        println!("estimate_phi = {}", o.estimate.phi);
        println!("estimate_c_err = {}", o.estimate.c_err);
        println!("t_estimate = {}", o.t);
        println!("dx = {}", o.dx);
        println!("dphi = {}", o.dphi);
    } else if mode != TrialMode::WallFollowOnly {
        println!("estimate = none");
    }
    if mode == TrialMode::FullPipeline {
        match &record.search {
            Some(s) => {
                println!("converged = true");
                println!("t_converged = {}", s.t);
                println!("pf_dx = {}", s.dx);
                println!("pf_dphi = {}", s.dphi);
                println!("restarts = {}", record.restarts);
            }
            None => println!("converged = false"),
        }
    }

    if let Some(trace) = &record.trace {
        if let Err(e) = std::fs::create_dir_all(&args.common.out) {
            return usage_error(format!("creating output dir: {e}"));
        }
        let path = args.common.out.join(format!("trace_{}.csv", record.seed));
        if let Err(e) = std::fs::write(&path, report::trace_csv(trace)) {
            return usage_error(format!("writing trace: {e}"));
        }
        println!("trace = {}", path.display());
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run_campaign_cmd(args),
        Command::Follow(args) => run_trial_cmd(args, TrialMode::WallFollowOnly),
        Command::Match(args) => run_trial_cmd(args, TrialMode::LandNavOnly),
        Command::Search(args) => run_trial_cmd(args, TrialMode::FullPipeline),
    }
}
