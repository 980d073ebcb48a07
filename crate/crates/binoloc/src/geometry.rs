//! Polygon boundary maps and the piecewise-constant boundary orientation
//! profile used for shape matching.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::stats::wrap_to_pi;

/// Points closer than this are treated as duplicates when loading a map.
const DUPLICATE_EPS: f64 = 1e-9;

/// A 2D point / vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Heading of this vector in radians.
    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("map needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("zero-length edge between vertices {0} and {1}")]
    ZeroLengthEdge(usize, usize),
    #[error("polygon is self-intersecting (edges {0} and {1} cross)")]
    SelfIntersecting(usize, usize),
    #[error("vertex coordinate is not finite at index {0}")]
    NonFinite(usize),
    #[error("failed to read map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("map file line {0}: expected `x y`, got {1:?}")]
    Parse(usize, String),
    #[error("structured map file: {0}")]
    Structured(String),
}

/// Closest point on the boundary to a query point.
#[derive(Debug, Clone, Copy)]
pub struct ClosestBoundary {
    pub point: Vec2,
    pub distance: f64,
    /// Index of the edge holding the closest point (ties go to the lowest index).
    pub edge: usize,
    /// Arclength coordinate of the closest point along the boundary, in [0, U).
    pub arclength: f64,
}

/// A closed simple polygon boundary map.
///
/// Vertices are normalized to counter-clockwise winding on construction; the
/// last vertex connects implicitly back to the first.
#[derive(Debug, Clone)]
pub struct PolygonMap {
    vertices: Vec<Vec2>,
    edge_lengths: Vec<f64>,
    /// Arclength of each vertex along the boundary; `cum_lengths[n] == circumference`.
    cum_lengths: Vec<f64>,
    circumference: f64,
    profile: OrientationProfile,
    reversed_on_load: bool,
    merged_duplicates: usize,
}

impl PolygonMap {
    pub fn from_vertices(raw: Vec<Vec2>) -> Result<Self, MapError> {
        for (i, v) in raw.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(MapError::NonFinite(i));
            }
        }

        // Merge consecutive duplicates, including a possible explicit closure.
        let mut vertices: Vec<Vec2> = Vec::with_capacity(raw.len());
        for v in raw {
            if vertices.last().map_or(true, |p| p.distance(v) > DUPLICATE_EPS) {
                vertices.push(v);
            }
        }
        let mut merged = 0;
        while vertices.len() > 1
            && vertices[0].distance(*vertices.last().unwrap()) <= DUPLICATE_EPS
        {
            vertices.pop();
            merged += 1;
        }

        if vertices.len() < 3 {
            return Err(MapError::TooFewVertices(vertices.len()));
        }

        // Normalize winding to CCW (shoelace).
        let area2: f64 = polygon_area2(&vertices);
        let reversed = area2 < 0.0;
        if reversed {
            vertices.reverse();
        }

        let n = vertices.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i].distance(vertices[j]) <= DUPLICATE_EPS {
                return Err(MapError::ZeroLengthEdge(i, j));
            }
        }
        if let Some((a, b)) = find_self_intersection(&vertices) {
            return Err(MapError::SelfIntersecting(a, b));
        }

        let mut edge_lengths = Vec::with_capacity(n);
        let mut cum_lengths = Vec::with_capacity(n + 1);
        cum_lengths.push(0.0);
        for i in 0..n {
            let len = vertices[i].distance(vertices[(i + 1) % n]);
            edge_lengths.push(len);
            cum_lengths.push(cum_lengths[i] + len);
        }
        let circumference = cum_lengths[n];
        let profile = OrientationProfile::for_closed_polygon(&vertices);

        Ok(Self {
            vertices,
            edge_lengths,
            cum_lengths,
            circumference,
            profile,
            reversed_on_load: reversed,
            merged_duplicates: merged,
        })
    }

    /// Loads a map file: plain text with one `x y` pair per line (`#` comments),
    /// or a TOML document with a `vertices = [[x, y], ...]` list when the file
    /// extension is `.toml`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::parse_structured(&text)
        } else {
            Self::parse_plain(&text)
        }
    }

    pub fn parse_plain(text: &str) -> Result<Self, MapError> {
        let mut vertices = Vec::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let x = it.next().and_then(|t| t.parse::<f64>().ok());
            let y = it.next().and_then(|t| t.parse::<f64>().ok());
            match (x, y, it.next()) {
                (Some(x), Some(y), None) => vertices.push(Vec2::new(x, y)),
                _ => return Err(MapError::Parse(lineno + 1, raw_line.to_string())),
            }
        }
        Self::from_vertices(vertices)
    }

    pub fn parse_structured(text: &str) -> Result<Self, MapError> {
        let doc: toml::Value = text
            .parse()
            .map_err(|e| MapError::Structured(format!("{e}")))?;
        let list = doc
            .get("vertices")
            .and_then(|v| v.as_array())
            .ok_or_else(|| MapError::Structured("missing `vertices` list".into()))?;
        let mut vertices = Vec::with_capacity(list.len());
        for (i, entry) in list.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| MapError::Structured(format!("vertices[{i}] is not a pair")))?;
            let num = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
            match (num(&pair[0]), num(&pair[1])) {
                (Some(x), Some(y)) => vertices.push(Vec2::new(x, y)),
                _ => {
                    return Err(MapError::Structured(format!(
                        "vertices[{i}] is not numeric"
                    )))
                }
            }
        }
        Self::from_vertices(vertices)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    /// Arclength coordinate of vertex `i` along the boundary.
    pub fn vertex_arclength(&self, i: usize) -> f64 {
        self.cum_lengths[i]
    }

    /// Orientation profile over the doubled vertex loop (spans `2 * circumference`).
    pub fn orientation_profile(&self) -> &OrientationProfile {
        &self.profile
    }

    pub fn reversed_on_load(&self) -> bool {
        self.reversed_on_load
    }

    pub fn merged_duplicates(&self) -> usize {
        self.merged_duplicates
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }

    /// True iff `p` lies inside the polygon or exactly on its boundary.
    pub fn contains(&self, p: Vec2) -> bool {
        // Boundary points count as inside.
        if self.closest_boundary(p).distance <= 1e-12 {
            return true;
        }
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x_cross = a.x + t * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Closest boundary point to `p`; ties broken by the lowest edge index.
    pub fn closest_boundary(&self, p: Vec2) -> ClosestBoundary {
        let n = self.vertices.len();
        let mut best = ClosestBoundary {
            point: self.vertices[0],
            distance: f64::INFINITY,
            edge: 0,
            arclength: 0.0,
        };
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let (q, t) = project_on_segment(p, a, b);
            let d = p.distance(q);
            if d < best.distance {
                best = ClosestBoundary {
                    point: q,
                    distance: d,
                    edge: i,
                    arclength: self.cum_lengths[i] + t * self.edge_lengths[i],
                };
            }
        }
        best
    }
}

/// Projects `p` onto segment `ab`; returns the projected point and its
/// parameter `t` in [0, 1].
fn project_on_segment(p: Vec2, a: Vec2, b: Vec2) -> (Vec2, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Twice the signed area (positive for CCW winding).
fn polygon_area2(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut sum = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        sum += a.cross(b);
    }
    sum
}

/// Returns the first pair of non-adjacent edges that properly intersect.
fn find_self_intersection(vertices: &[Vec2]) -> Option<(usize, usize)> {
    let n = vertices.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip adjacent edges (they share a vertex).
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2| {
        (q - p).cross(r - p).abs() <= 1e-12
            && r.x >= p.x.min(q.x) - 1e-12
            && r.x <= p.x.max(q.x) + 1e-12
            && r.y >= p.y.min(q.y) - 1e-12
            && r.y <= p.y.max(q.y) + 1e-12
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

/// Piecewise-constant heading as a function of arclength along a polyline.
///
/// The value on `[breakpoints[i], breakpoints[i+1])` is `values[i]`. Headings
/// are unwrapped: each step equals the signed turn at the shared vertex,
/// wrapped to `(-pi, pi]` before accumulation.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl OrientationProfile {
    /// Profile over the doubled vertex loop of a closed polygon, spanning
    /// `2 * circumference`, so any window of length <= circumference ending in
    /// the second copy is representable.
    pub fn for_closed_polygon(vertices: &[Vec2]) -> Self {
        let n = vertices.len();
        debug_assert!(n >= 3);
        // Doubled list [v_0..v_{n-1}, v_0..v_{n-1}, v_0] gives 2n edges.
        let edge = |i: usize| {
            let a = vertices[i % n];
            let b = vertices[(i + 1) % n];
            b - a
        };
        let mut breakpoints = Vec::with_capacity(2 * n + 1);
        let mut values = Vec::with_capacity(2 * n);
        breakpoints.push(0.0);
        let mut phi = 0.0;
        let mut prev_heading = edge(0).heading();
        for i in 0..2 * n {
            let e = edge(i);
            if i > 0 {
                let h = e.heading();
                phi += wrap_to_pi(h - prev_heading);
                prev_heading = h;
            }
            values.push(phi);
            breakpoints.push(breakpoints[i] + e.norm());
        }
        Self {
            breakpoints,
            values,
        }
    }

    /// Profile over an open polyline (single pass, no closure). Needs at
    /// least two distinct points.
    pub fn for_polyline(points: &[Vec2]) -> Option<Self> {
        let edges: Vec<Vec2> = points
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|e| e.norm() > 0.0)
            .collect();
        if edges.is_empty() {
            return None;
        }
        let mut breakpoints = Vec::with_capacity(edges.len() + 1);
        let mut values = Vec::with_capacity(edges.len());
        breakpoints.push(0.0);
        let mut phi = 0.0;
        let mut prev_heading = edges[0].heading();
        for (i, e) in edges.iter().enumerate() {
            if i > 0 {
                let h = e.heading();
                phi += wrap_to_pi(h - prev_heading);
                prev_heading = h;
            }
            values.push(phi);
            breakpoints.push(breakpoints[i] + e.norm());
        }
        Some(Self {
            breakpoints,
            values,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.values.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_length(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn domain_start(&self) -> f64 {
        self.breakpoints[0]
    }

    /// Left-continuous evaluation: the value at a breakpoint is the segment
    /// ending there. Clamps outside the domain. This is the convention used
    /// for window comparison, so a window's final value anchors to the
    /// heading of the edge arriving at the window end.
    pub fn value_left(&self, x: f64) -> f64 {
        let m = self.values.len();
        // Number of breakpoints strictly below x; segment i covers (b_i, b_{i+1}].
        let k = self.breakpoints.partition_point(|&b| b < x);
        if k == 0 {
            self.values[0]
        } else {
            self.values[(k - 1).min(m - 1)]
        }
    }

    /// Right-continuous evaluation: the value at a breakpoint is the segment
    /// starting there. Clamps outside the domain. Used for the first sample
    /// of a comparison window, where the relevant edge is the one inside the
    /// window rather than the one arriving at its start.
    pub fn value_right(&self, x: f64) -> f64 {
        let m = self.values.len();
        let k = self.breakpoints.partition_point(|&b| b <= x);
        if k == 0 {
            self.values[0]
        } else {
            self.values[(k - 1).min(m - 1)]
        }
    }

    /// Boundary window ending at doubled-list vertex `i`, re-anchored so that
    /// the incoming edge at the vertex maps to heading 0: the returned profile
    /// evaluates `theta_b(x + l_i) - theta_b(l_i^-)` at window coordinate `x`,
    /// so its domain covers `[-circumference, 0]` for second-copy vertices.
    pub fn shifted_vertex_profile(&self, i: usize) -> Result<OrientationProfile, ProfileError> {
        let segments = self.values.len();
        debug_assert!(segments % 2 == 0, "shift is defined on doubled-loop profiles");
        let n = segments / 2;
        if i < n || i >= 2 * n {
            return Err(ProfileError::VertexOutOfRange { index: i, n });
        }
        let l_i = self.breakpoints[i];
        let anchor = self.values[i - 1]; // incoming edge heading at vertex i
        Ok(OrientationProfile {
            breakpoints: self.breakpoints.iter().map(|b| b - l_i).collect(),
            values: self.values.iter().map(|v| v - anchor).collect(),
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("vertex index {index} outside the second copy of the doubled list (n = {n})")]
    VertexOutOfRange { index: usize, n: usize },
}
