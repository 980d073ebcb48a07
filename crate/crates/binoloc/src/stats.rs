//! Small statistics helpers: angle wrapping, circular mean/std, scalar
//! summaries and fixed-width histograms.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_to_pi(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Absolute wrapped difference between two angles, in `[0, pi]`.
pub fn angle_error(a: f64, b: f64) -> f64 {
    wrap_to_pi(a - b).abs()
}

/// Weighted circular mean of `angles`. Weights need not be normalized.
pub fn circular_mean(angles: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(angles.len(), weights.len());
    let mut s = 0.0;
    let mut c = 0.0;
    for (&a, &w) in angles.iter().zip(weights) {
        s += w * a.sin();
        c += w * a.cos();
    }
    s.atan2(c)
}

/// Weighted circular standard deviation, `sqrt(-2 ln R)` with `R` the mean
/// resultant length. Returns infinity for a fully dispersed set.
pub fn circular_std(angles: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(angles.len(), weights.len());
    let mut s = 0.0;
    let mut c = 0.0;
    let mut wsum = 0.0;
    for (&a, &w) in angles.iter().zip(weights) {
        s += w * a.sin();
        c += w * a.cos();
        wsum += w;
    }
    if wsum <= 0.0 {
        return f64::INFINITY;
    }
    let r = (s.hypot(c) / wsum).min(1.0);
    if r <= 0.0 {
        f64::INFINITY
    } else {
        (-2.0 * r.ln()).sqrt()
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

#[derive(Debug, Error, PartialEq)]
pub enum HistogramError {
    #[error("cannot build a histogram from an empty value set")]
    Empty,
    #[error("bin width must be positive, got {0}")]
    BadBinWidth(f64),
    #[error("histogram values must be finite and non-negative")]
    BadValue,
}

/// One histogram bin covering `[low, high)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Fixed-width bins covering `[0, max]`; counts sum to the input length.
/// Values landing exactly on the top edge fall into the last bin.
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>, HistogramError> {
    if values.is_empty() {
        return Err(HistogramError::Empty);
    }
    if !(bin_width > 0.0) {
        return Err(HistogramError::BadBinWidth(bin_width));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(HistogramError::BadValue);
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    let nbins = ((max / bin_width).floor() as usize + 1).max(1);
    let mut bins: Vec<HistogramBin> = (0..nbins)
        .map(|i| HistogramBin {
            low: i as f64 * bin_width,
            high: (i + 1) as f64 * bin_width,
            count: 0,
        })
        .collect();
    for &v in values {
        let idx = ((v / bin_width).floor() as usize).min(nbins - 1);
        bins[idx].count += 1;
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_lands_in_half_open_interval() {
        assert_eq!(wrap_to_pi(PI), PI);
        assert!((wrap_to_pi(-PI) - PI).abs() < 1e-12);
        assert!((wrap_to_pi(3.0 * PI) - PI).abs() < 1e-12);
        assert!(wrap_to_pi(0.1).abs() - 0.1 < 1e-12);
        assert!((wrap_to_pi(TAU + 0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn circular_mean_handles_wraparound() {
        let m = circular_mean(&[3.1, -3.1], &[1.0, 1.0]);
        assert!(angle_error(m, PI) < 1e-9, "mean {m}");
    }

    #[test]
    fn circular_std_extremes() {
        assert_eq!(circular_std(&[0.7, 0.7, 0.7], &[1.0, 1.0, 1.0]), 0.0);
        // Uniform headings: the resultant is numerically ~0, so sqrt(-2 ln R)
        // is far above any convergence threshold, though finite.
        let n = 360;
        let angles: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        let weights = vec![1.0; n];
        assert!(circular_std(&angles, &weights) > 2.0);
    }

    #[test]
    fn histogram_example_bins() {
        let bins = histogram(&[0.1, 0.1, 0.3], 0.2).unwrap();
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[1].count, 1);
        assert!((bins[0].low, bins[0].high) == (0.0, 0.2));
        assert!((bins[1].low, bins[1].high) == (0.2, 0.4000000000000001) || bins[1].high > 0.39);
    }

    #[test]
    fn histogram_counts_sum_to_input_len() {
        let values = vec![0.0, 0.05, 0.1, 0.2, 0.99, 1.0];
        let bins = histogram(&values, 0.25).unwrap();
        let total: usize = bins.iter().map(|b| b.count).sum();
        assert_eq!(total, values.len());
    }

    #[test]
    fn histogram_rejects_empty() {
        assert_eq!(histogram(&[], 0.1), Err(HistogramError::Empty));
    }
}
