//! CSV rendering for campaign outputs. All numbers use Rust's
//! shortest-roundtrip float formatting, so files are byte-reproducible and
//! parse back to the exact values.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::sim::{CampaignOutput, SweepCell, TraceRow, TrialRow};
use crate::stats::HistogramBin;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per trial. Columns:
/// seed, dx, dphi, t_estimate, converged, mse, v_mean, pf_dx, pf_dphi,
/// t_converged, restarts. Missing values are empty cells.
pub fn trials_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from(
        "seed,dx,dphi,t_estimate,converged,mse,v_mean,pf_dx,pf_dphi,t_converged,restarts\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            opt(r.dx),
            opt(r.dphi),
            opt(r.t_estimate),
            opt_bool(r.converged),
            opt(r.mse),
            opt(r.v_mean),
            opt(r.pf_dx),
            opt(r.pf_dphi),
            opt(r.t_converged),
            r.restarts,
        );
    }
    out
}

/// One row per sweep cell. Columns:
/// a_mu, a_v, noise, trials, completed, mse_mean, v_mean_mean.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("a_mu,a_v,noise,trials,completed,mse_mean,v_mean_mean\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.a_mu,
            c.a_v,
            c.noise,
            c.trials,
            c.completed,
            opt(c.mse_mean),
            opt(c.v_mean_mean),
        );
    }
    out
}

/// Full state trace. Columns:
/// t, x_true, y_true, phi_true, x_odom, y_odom, phi_odom, s.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("t,x_true,y_true,phi_true,x_odom,y_odom,phi_odom,s\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.true_pose.x,
            r.true_pose.y,
            r.true_pose.phi,
            r.odom_pose.x,
            r.odom_pose.y,
            r.odom_pose.phi,
            u8::from(r.s),
        );
    }
    out
}

/// Histogram rows: bin_low, bin_high, count.
pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_low,bin_high,count\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", b.low, b.high, b.count);
    }
    out
}

/// Key-value summary rows.
pub fn summary_csv(pairs: &[(String, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

/// Writes every campaign file into `dir`, creating it if needed.
pub fn write_campaign(dir: &Path, output: &CampaignOutput) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &output.files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
