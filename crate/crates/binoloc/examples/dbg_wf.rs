use binoloc::config::SimConfig;
use binoloc::geometry::PolygonMap;
use binoloc::land_nav::{correlation_errors, path_orientation_profile, DominantPointTrack};
use binoloc::motion::{sample_odometry_motion, sample_velocity_motion, sensor_position, LeverArm};
use binoloc::sensing::{measure, BinarySensorConfig};
use binoloc::wall_follower::{self, Mode, WallFollowerState};
use rand::SeedableRng;

fn main() {
    let map = PolygonMap::load("fixtures/map1.txt").unwrap();
    let cfg = SimConfig::default();
    for seed in [7u64, 8, 9] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let arm = LeverArm::new(0.3, 0.0);
        let sensor = BinarySensorConfig::new(0.1).unwrap();
        let mut pose = binoloc::sim::sample_interior_pose(&map, &mut rng);
        let mut odom = pose;
        let mut wf = WallFollowerState::new();
        let mut track: Option<DominantPointTrack> = None;
        let dt = 0.05;
        let u = map.circumference();
        let mut t = 0.0;
        let mut cmins = Vec::new();
        let mut hits = 0usize;
        for _ in 0..(900.0_f64 / dt) as usize {
            let spos = sensor_position(&pose, &arm);
            let s = measure(&map, spos, &sensor, &mut rng);
            let prev_mode = wf.mode;
            let (next, cmd) = wall_follower::step(&wf, s, &cfg.wall_follower);
            wf = next;
            if prev_mode == Mode::Search && wf.mode == Mode::Follow {
                track = Some(DominantPointTrack::new(odom.position(), &cfg.land_nav, u));
            } else if let Some(tk) = &mut track {
                if tk.update(odom.position()).is_some() {
                    let chain: Vec<_> = tk.dominant_points().copied().collect();
                    let len = tk.accumulated_length().min(u);
                    if len >= cfg.land_nav.u_min * u {
                        let profile = path_orientation_profile(&chain).unwrap();
                        let c = correlation_errors(map.orientation_profile(), &profile, len, 512);
                        let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
                        cmins.push(cmin);
                        if cmin < 0.2 { hits += 1; }
                    }
                }
            }
            let prev = pose;
            pose = sample_velocity_motion(&pose, &cmd, dt, &cfg.motion.velocity, &mut rng);
            odom = sample_odometry_motion(&odom, &prev, &pose, &cfg.motion.odometry, &mut rng);
            t += dt;
        }
        cmins.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = cmins.len();
        if n > 0 {
            eprintln!("seed {}: {} events, hits(<0.2)={} cmin: min={:.3} p10={:.3} p25={:.3} median={:.3}",
                seed, n, hits, cmins[0], cmins[n/10], cmins[n/4], cmins[n/2]);
        }
    }
}
