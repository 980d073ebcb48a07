//! Path integration and land navigation: compress the odometry path into
//! dominant points, build its orientation profile, and correlate that profile
//! against every map vertex to produce the first pose estimate.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::{OrientationProfile, PolygonMap, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandNavParams {
    /// Minimal spacing before the line-fit test starts, meters.
    pub l_min: f64,
    /// Maximal mean line-fit error, meters.
    pub e_max: f64,
    /// Correlation-error threshold for accepting a match, radians.
    pub c_min: f64,
    /// Minimal stored path length as a fraction of the map circumference.
    pub u_min: f64,
    /// Number of correlation sample points.
    pub n_samples: usize,
}

impl LandNavParams {
    /// Trained parameters for the map-1 fixture.
    pub const fn map1() -> Self {
        Self {
            l_min: 0.5,
            e_max: 0.01,
            c_min: 0.2,
            u_min: 0.5,
            n_samples: 512,
        }
    }

    /// Trained parameters for the map-2 fixture.
    pub const fn map2() -> Self {
        Self {
            l_min: 0.5,
            e_max: 0.01,
            c_min: 0.3,
            u_min: 0.4,
            n_samples: 512,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("L_min", self.l_min),
            ("e_max", self.e_max),
            ("c_min", self.c_min),
            ("U_min", self.u_min),
        ] {
            if !(v > 0.0) {
                return Err(format!("land_nav.{name} must be positive, got {v}"));
            }
        }
        if self.u_min > 1.0 {
            return Err(format!("land_nav.U_min must be <= 1, got {}", self.u_min));
        }
        if self.n_samples < 2 {
            return Err("land_nav.N must be at least 2".into());
        }
        Ok(())
    }
}

/// Mean perpendicular distance of the interior points to the line through the
/// first and last point. Fewer than 3 points fit a line exactly.
pub fn line_fit_error(points: &[Vec2]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let first = points[0];
    let last = *points.last().unwrap();
    let chord = last - first;
    let len = chord.norm();
    let interior = &points[1..points.len() - 1];
    let sum: f64 = if len <= 1e-12 {
        interior.iter().map(|p| p.distance(first)).sum()
    } else {
        interior
            .iter()
            .map(|p| (chord.cross(*p - first) / len).abs())
            .sum()
    };
    sum / interior.len() as f64
}

/// The odometry path compressed to dominant points. Committed points plus the
/// current pending endpoint form the polyline used for matching; the stored
/// chain is capped at the map circumference by evicting the oldest points.
#[derive(Debug, Clone)]
pub struct DominantPointTrack {
    dps: VecDeque<Vec2>,
    /// Temporary point set; its first element is always the last committed DP.
    pending: Vec<Vec2>,
    /// Sum of consecutive committed DP distances.
    accumulated_length: f64,
    max_length: f64,
    l_min: f64,
    e_max: f64,
}

impl DominantPointTrack {
    /// Starts a track at the first boundary-contact position.
    pub fn new(x0: Vec2, params: &LandNavParams, max_length: f64) -> Self {
        let mut dps = VecDeque::new();
        dps.push_back(x0);
        Self {
            dps,
            pending: vec![x0],
            accumulated_length: 0.0,
            max_length,
            l_min: params.l_min,
            e_max: params.e_max,
        }
    }

    pub fn dominant_points(&self) -> impl Iterator<Item = &Vec2> {
        self.dps.iter()
    }

    pub fn accumulated_length(&self) -> f64 {
        self.accumulated_length
    }

    /// Committed chain plus the pending endpoint.
    pub fn chain(&self) -> Vec<Vec2> {
        let mut chain: Vec<Vec2> = self.dps.iter().copied().collect();
        if let Some(&tail) = self.pending.last() {
            if chain.last().map_or(true, |&last| last.distance(tail) > 0.0) {
                chain.push(tail);
            }
        }
        chain
    }

    /// Length of the matching polyline (committed chain plus pending tail).
    pub fn chain_length(&self) -> f64 {
        let tail = match (self.dps.back(), self.pending.last()) {
            (Some(&dp), Some(&p)) => dp.distance(p),
            _ => 0.0,
        };
        self.accumulated_length + tail
    }

    /// Feeds one odometry position. Returns the newly committed dominant
    /// point, if the line-fit test split the pending segment here.
    pub fn update(&mut self, x: Vec2) -> Option<Vec2> {
        let dp_end = *self.dps.back().expect("track always holds one DP");
        let committed = if dp_end.distance(x) < self.l_min {
            self.pending.push(x);
            None
        } else {
            let mut tentative = self.pending.clone();
            tentative.push(x);
            if line_fit_error(&tentative) < self.e_max {
                self.pending = tentative;
                None
            } else {
                // The previous endpoint is the last point that still fit.
                let new_dp = *self.pending.last().unwrap();
                self.accumulated_length += dp_end.distance(new_dp);
                self.dps.push_back(new_dp);
                self.pending = vec![new_dp, x];
                Some(new_dp)
            }
        };
        self.evict_to_cap();
        committed
    }

    fn evict_to_cap(&mut self) {
        while self.dps.len() > 2 && self.chain_length() > self.max_length {
            let old = self.dps.pop_front().unwrap();
            self.accumulated_length -= old.distance(self.dps[0]);
        }
        self.accumulated_length = self.accumulated_length.max(0.0);
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LandNavError {
    #[error("stored path length {got:.3} m is below the required {required:.3} m")]
    PathTooShort { got: f64, required: f64 },
    #[error("need at least 2 dominant points to build a path profile")]
    InsufficientPoints,
}

/// Orientation profile over the dominant-point chain (open polyline).
pub fn path_orientation_profile(points: &[Vec2]) -> Result<OrientationProfile, LandNavError> {
    OrientationProfile::for_polyline(points).ok_or(LandNavError::InsufficientPoints)
}

/// Correlation error between the path window and the boundary window ending
/// at every map vertex: the mean absolute difference of the two end-anchored
/// profiles over `n_samples` points spanning the last `path_len` meters.
/// Differences are wrapped to `(-pi, pi]` before taking the absolute value:
/// a near-reversal chord in the driven path (the robot pivoting at a corner)
/// shifts the unwrapped profile by a full turn, and without wrapping one
/// such chord poisons every window containing it.
///
/// Entry `j` of the result corresponds to physical vertex `j`, evaluated at
/// its second-copy position in the doubled map profile.
pub fn correlation_errors(
    map_profile: &OrientationProfile,
    path_profile: &OrientationProfile,
    path_len: f64,
    n_samples: usize,
) -> Vec<f64> {
    debug_assert!(n_samples >= 2);
    let n = map_profile.segment_count() / 2;
    let path_end = path_profile.total_length();
    let path_anchor = path_profile.value_left(path_end);
    let step = path_len / (n_samples - 1) as f64;

    // Window evaluation: the first sample takes the segment starting at the
    // window start, every later sample the segment ending at it. Both
    // profiles use the same rule, so exact window matches stay exact.
    let eval = |profile: &OrientationProfile, x: f64, k: usize| {
        if k == 0 {
            profile.value_right(x)
        } else {
            profile.value_left(x)
        }
    };

    // Path window samples, end-anchored to 0.
    let path_window: Vec<f64> = (0..n_samples)
        .map(|k| eval(path_profile, path_end - path_len + k as f64 * step, k) - path_anchor)
        .collect();

    (0..n)
        .map(|j| {
            let l_i = map_profile.breakpoints()[n + j];
            let anchor = map_profile.value_left(l_i);
            let mut sum = 0.0;
            for (k, &pw) in path_window.iter().enumerate() {
                let bw = eval(map_profile, l_i - path_len + k as f64 * step, k) - anchor;
                sum += crate::stats::wrap_to_pi(bw - pw).abs();
            }
            sum / n_samples as f64
        })
        .collect()
}

/// First pose estimate from a successful shape match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    /// Matched vertex coordinates.
    pub position: Vec2,
    /// Heading of the boundary edge arriving at the matched vertex.
    pub phi: f64,
    /// Correlation error of the winning vertex, radians.
    pub c_err: f64,
    /// Physical vertex index into the map's vertex list.
    pub vertex: usize,
}

/// Attempts a match of the stored path against the map. Returns `None` while
/// the path is too short or no vertex beats the correlation threshold.
pub fn try_match(
    track: &DominantPointTrack,
    map: &PolygonMap,
    params: &LandNavParams,
) -> Option<PoseEstimate> {
    let circumference = map.circumference();
    let chain = track.chain();
    if chain.len() < 2 {
        return None;
    }
    let path_len = track.chain_length().min(circumference);
    if path_len < params.u_min * circumference {
        return None;
    }
    let path_profile = path_orientation_profile(&chain).ok()?;
    let errors = correlation_errors(
        map.orientation_profile(),
        &path_profile,
        path_len,
        params.n_samples,
    );
    let (vertex, &c_err) = errors
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())?;
    if c_err >= params.c_min {
        return None;
    }
    let n = map.vertices().len();
    let position = map.vertices()[vertex];
    let prev = map.vertices()[(vertex + n - 1) % n];
    Some(PoseEstimate {
        position,
        phi: (position - prev).heading(),
        c_err,
        vertex,
    })
}
