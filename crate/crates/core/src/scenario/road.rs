//! Road centerline generation from the ego path, with optional extension
//! along the reversed tail of an oncoming agent.

use nalgebra::{DMatrix, DVector};

use crate::trajectory::SmoothTrajectory;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoadSpec {
    pub centerline: Vec<[f64; 2]>,
    pub lane_count: u32,
    pub lane_width: f64,
}

pub const MIN_WAYPOINT_SPACING: f64 = 0.5;
pub const MAX_WAYPOINT_SPACING: f64 = 20.0;

impl RoadSpec {
    /// Violated invariants, empty when the road is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lane_count == 0 {
            out.push("road: lane_count must be at least 1".to_string());
        }
        if !(self.lane_width > 0.0 && self.lane_width.is_finite()) {
            out.push(format!("road: lane_width {} must be positive", self.lane_width));
        }
        if self.centerline.len() < 2 {
            out.push("road: centerline needs at least two waypoints".to_string());
            return out;
        }
        if self.centerline.iter().flatten().any(|v| !v.is_finite()) {
            out.push("road: centerline has non-finite coordinates".to_string());
            return out;
        }
        for (i, w) in self.centerline.windows(2).enumerate() {
            let d = dist(w[0], w[1]);
            if !(MIN_WAYPOINT_SPACING..=MAX_WAYPOINT_SPACING).contains(&d) {
                out.push(format!(
                    "road: spacing {d:.3} m between centerline waypoints {i} and {} outside [{MIN_WAYPOINT_SPACING}, {MAX_WAYPOINT_SPACING}] m",
                    i + 1
                ));
            }
        }
        if let Some((i, j)) = self_intersection(&self.centerline) {
            out.push(format!("road: centerline segments {i} and {j} intersect"));
        }
        out
    }

    pub fn length(&self) -> f64 {
        self.centerline.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Lateral half-width of the paved area.
    pub fn half_width(&self) -> f64 {
        self.lane_count as f64 * self.lane_width / 2.0
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn unit(a: [f64; 2]) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    [a[0] / n, a[1] / n]
}

fn self_intersection(pts: &[[f64; 2]]) -> Option<(usize, usize)> {
    let n = pts.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 2..n - 1 {
            let (a, b, c, d) = (pts[i], pts[i + 1], pts[j], pts[j + 1]);
            let d1 = cross(sub(b, a), sub(c, a));
            let d2 = cross(sub(b, a), sub(d, a));
            let d3 = cross(sub(d, c), sub(a, c));
            let d4 = cross(sub(d, c), sub(b, c));
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return Some((i, j));
            }
        }
    }
    None
}

/// Arc-length parameterized polyline with Frenet-style queries. Queries
/// beyond either end continue along the end segments.
#[derive(Debug, Clone)]
pub struct Polyline {
    pts: Vec<[f64; 2]>,
    cum: Vec<f64>,
}

impl Polyline {
    pub fn new(pts: &[[f64; 2]]) -> Result<Self> {
        let mut clean: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
        for &p in pts {
            if clean.last().is_none_or(|&q| dist(p, q) > 1e-9) {
                clean.push(p);
            }
        }
        if clean.len() < 2 {
            return Err(Error::Degenerate("polyline needs two distinct points".into()));
        }
        let mut cum = vec![0.0];
        for w in clean.windows(2) {
            cum.push(cum.last().unwrap() + dist(w[0], w[1]));
        }
        Ok(Polyline { pts: clean, cum })
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn segment_of(&self, s: f64) -> usize {
        self.cum.partition_point(|&c| c <= s).clamp(1, self.pts.len() - 1) - 1
    }

    pub fn tangent(&self, s: f64) -> [f64; 2] {
        let i = self.segment_of(s);
        unit(sub(self.pts[i + 1], self.pts[i]))
    }

    /// Point at arc length `s` offset `d` to the left.
    pub fn at(&self, s: f64, d: f64) -> [f64; 2] {
        let i = self.segment_of(s);
        let t = self.tangent(s);
        let a = self.pts[i];
        let u = s - self.cum[i];
        [a[0] + t[0] * u - t[1] * d, a[1] + t[1] * u + t[0] * d]
    }

    /// Closest-point coordinates `(s, d)`, `d` positive to the left.
    pub fn project(&self, q: [f64; 2]) -> (f64, f64) {
        let last = self.pts.len() - 2;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=last {
            let (a, b) = (self.pts[i], self.pts[i + 1]);
            let len = self.cum[i + 1] - self.cum[i];
            let t = unit(sub(b, a));
            let mut u = dot(sub(q, a), t);
            if i > 0 {
                u = u.max(0.0);
            }
            if i < last {
                u = u.min(len);
            }
            let foot = [a[0] + t[0] * u, a[1] + t[1] * u];
            let dd = dist(q, foot);
            if dd < best.0 {
                best = (dd, self.cum[i] + u, cross(t, sub(q, a)));
            }
        }
        (best.1, best.2)
    }
}

/// Uniform cubic B-spline on `[u0, u0 + step * spans]`.
#[derive(Debug, Clone)]
struct BSpline {
    u0: f64,
    step: f64,
    spans: usize,
    coef: Vec<f64>,
}

impl BSpline {
    fn basis(&self, u: f64) -> (usize, [f64; 4], [f64; 4]) {
        let x = ((u - self.u0) / self.step).clamp(0.0, self.spans as f64);
        let k = (x.floor() as usize).min(self.spans - 1);
        let t = x - k as f64;
        let b = [
            (1.0 - t).powi(3) / 6.0,
            (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
            (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0,
            t * t * t / 6.0,
        ];
        let db = [
            -(1.0 - t).powi(2) / 2.0 / self.step,
            (9.0 * t * t - 12.0 * t) / 6.0 / self.step,
            (-9.0 * t * t + 6.0 * t + 3.0) / 6.0 / self.step,
            t * t / 2.0 / self.step,
        ];
        (k, b, db)
    }

    /// Least-squares fit with knot spacing close to `spacing`; the minimum
    /// norm solution keeps spans without data well defined.
    fn fit(u: &[f64], v: &[f64], spacing: f64) -> Result<Self> {
        let u0 = u.iter().copied().fold(f64::INFINITY, f64::min);
        let u1 = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spans = (((u1 - u0) / spacing).ceil() as usize).max(1);
        let step = ((u1 - u0) / spans as f64).max(f64::MIN_POSITIVE);
        let mut spline = BSpline { u0, step, spans, coef: vec![0.0; spans + 3] };
        let mut a = DMatrix::zeros(u.len(), spans + 3);
        for (r, &ui) in u.iter().enumerate() {
            let (k, b, _) = spline.basis(ui);
            for j in 0..4 {
                a[(r, k + j)] = b[j];
            }
        }
        let sol = a
            .svd(true, true)
            .solve(&DVector::from_column_slice(v), 1e-10)
            .map_err(|e| Error::Degenerate(e.to_string()))?;
        spline.coef = sol.iter().copied().collect();
        Ok(spline)
    }

    fn eval(&self, u: f64) -> f64 {
        let (k, b, _) = self.basis(u);
        (0..4).map(|j| b[j] * self.coef[k + j]).sum()
    }

    fn derivative(&self, u: f64) -> f64 {
        let (k, _, db) = self.basis(u);
        (0..4).map(|j| db[j] * self.coef[k + j]).sum()
    }

    fn domain(&self) -> (f64, f64) {
        (self.u0, self.u0 + self.step * self.spans as f64)
    }
}

/// Smoothed curve: the graph `y(x)` when x increases monotonically along
/// the path, otherwise a chord-length parametric fit.
enum Curve {
    Graph(BSpline),
    Parametric(BSpline, BSpline),
}

impl Curve {
    fn fit(points: &[[f64; 2]], spacing: f64) -> Result<Self> {
        if points.windows(2).all(|w| w[1][0] > w[0][0]) {
            let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
            return Ok(Curve::Graph(BSpline::fit(&xs, &ys, spacing)?));
        }
        let mut u = vec![0.0];
        for w in points.windows(2) {
            u.push(u.last().unwrap() + dist(w[0], w[1]));
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        Ok(Curve::Parametric(BSpline::fit(&u, &xs, spacing)?, BSpline::fit(&u, &ys, spacing)?))
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            Curve::Graph(g) => g.domain(),
            Curve::Parametric(x, _) => x.domain(),
        }
    }

    fn eval(&self, p: f64) -> [f64; 2] {
        match self {
            Curve::Graph(g) => [p, g.eval(p)],
            Curve::Parametric(x, y) => [x.eval(p), y.eval(p)],
        }
    }

    fn derivative(&self, p: f64) -> [f64; 2] {
        match self {
            Curve::Graph(g) => [1.0, g.derivative(p)],
            Curve::Parametric(x, y) => [x.derivative(p), y.derivative(p)],
        }
    }
}

/// Samples a curve at fixed arc-length spacing, endpoint included. A final
/// remainder shorter than the minimum spacing is merged into the last step.
fn resample<F: Fn(f64) -> [f64; 2]>(f: F, p0: f64, p1: f64, spacing: f64) -> Vec<[f64; 2]> {
    const DENSE: usize = 4000;
    let mut ps = Vec::with_capacity(DENSE + 1);
    let mut ss = Vec::with_capacity(DENSE + 1);
    let mut prev = f(p0);
    let mut s = 0.0;
    for k in 0..=DENSE {
        let p = p0 + (p1 - p0) * k as f64 / DENSE as f64;
        let q = f(p);
        s += dist(prev, q);
        prev = q;
        ps.push(p);
        ss.push(s);
    }
    let total = s;
    let mut out = Vec::new();
    let mut target = 0.0;
    while target < total - MIN_WAYPOINT_SPACING {
        let i = ss.partition_point(|&v| v < target).min(DENSE);
        let p = if i == 0 {
            ps[0]
        } else {
            let r = (target - ss[i - 1]) / (ss[i] - ss[i - 1]).max(f64::MIN_POSITIVE);
            ps[i - 1] + r * (ps[i] - ps[i - 1])
        };
        out.push(f(p));
        target += spacing;
    }
    out.push(f(p1));
    out
}

/// Tunables of road generation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadParams {
    /// Knot spacing of the least-squares centerline spline, m.
    pub knot_spacing: f64,
    /// Output waypoint spacing, m.
    pub waypoint_spacing: f64,
    /// Length over which an oncoming tail is blended onto the centerline, m.
    pub blend_length: f64,
    pub min_ego_length: f64,
}

impl Default for RoadParams {
    fn default() -> Self {
        RoadParams { knot_spacing: 25.0, waypoint_spacing: 2.0, blend_length: 10.0, min_ego_length: 10.0 }
    }
}

/// Junction between the ego-derived centerline and an extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    /// Index of the last base waypoint.
    pub index: usize,
    pub base_tangent: [f64; 2],
    pub extension_tangent: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadBuild {
    pub road: RoadSpec,
    pub junction: Option<Junction>,
}

/// Road from a smoothed ego path and smoothed oncoming agent paths.
pub fn generate_road(
    ego: &SmoothTrajectory,
    oncoming: &[SmoothTrajectory],
    lane_count: u32,
    lane_width: f64,
    params: &RoadParams,
) -> Result<RoadBuild> {
    let sample = |p: &SmoothTrajectory| -> Vec<[f64; 2]> {
        let len = p.arc_length();
        let n = ((len / 0.5).ceil() as usize).max(1);
        (0..=n).map(|k| p.position_at_arc(len * k as f64 / n as f64)).collect()
    };
    let others: Vec<Vec<[f64; 2]>> = oncoming.iter().map(|p| {
        let (lo, hi) = p.domain();
        let n = (((hi - lo) * 10.0).ceil() as usize).max(1);
        (0..=n).map(|k| p.position(lo + (hi - lo) * k as f64 / n as f64)).collect()
    }).collect();
    generate_road_from_points(&sample(ego), &others, lane_count, lane_width, params)
}

/// Road from an ego path polyline; `oncoming` paths are in their own time
/// order (approaching the ego).
pub fn generate_road_from_points(
    ego: &[[f64; 2]],
    oncoming: &[Vec<[f64; 2]>],
    lane_count: u32,
    lane_width: f64,
    params: &RoadParams,
) -> Result<RoadBuild> {
    let raw_len: f64 = ego.windows(2).map(|w| dist(w[0], w[1])).sum();
    if !(raw_len >= params.min_ego_length) {
        return Err(Error::Degenerate(format!(
            "ego path is {raw_len:.2} m long; road generation needs at least {} m",
            params.min_ego_length
        )));
    }
    let curve = Curve::fit(ego, params.knot_spacing)?;
    let (p0, p1) = curve.domain();
    let mut centerline = resample(|p| curve.eval(p), p0, p1, params.waypoint_spacing);
    let end = *centerline.last().unwrap();
    let end_tangent = unit(curve.derivative(p1));

    let base = Polyline::new(&centerline)?;
    let extension = oncoming
        .iter()
        .filter_map(|path| extension_from(path, &base, end, end_tangent, params))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let mut junction = None;
    if let Some((ext, _, ext_tangent)) = extension {
        junction = Some(Junction { index: centerline.len() - 1, base_tangent: end_tangent, extension_tangent: ext_tangent });
        centerline.extend(ext);
    }
    Ok(RoadBuild { road: RoadSpec { centerline, lane_count, lane_width }, junction })
}

/// Cubic Hermite curve from `a` to `b` with end derivatives `ta`, `tb`.
pub(crate) fn hermite(a: [f64; 2], ta: [f64; 2], b: [f64; 2], tb: [f64; 2], s: f64) -> [f64; 2] {
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    [0, 1].map(|i| h00 * a[i] + h10 * ta[i] + h01 * b[i] + h11 * tb[i])
}

/// Extension points beyond the centerline end built from an oncoming path,
/// with the extension length and its initial tangent. `None` when the path
/// does not reach past the end.
fn extension_from(
    path: &[[f64; 2]],
    base: &Polyline,
    end: [f64; 2],
    tangent: [f64; 2],
    params: &RoadParams,
) -> Option<(Vec<[f64; 2]>, f64, [f64; 2])> {
    let normal = [-tangent[1], tangent[0]];
    let rev: Vec<[f64; 2]> = path.iter().rev().copied().collect();
    let beyond: Vec<f64> = rev.iter().map(|&q| dot(sub(q, end), tangent)).collect();
    // contiguous run past the end
    let start = beyond.iter().rposition(|&b| b <= 0.0).map_or(0, |i| i + 1);
    let tail: Vec<[f64; 2]> = rev[start..].to_vec();
    if tail.len() < 2 || beyond[rev.len() - 1] <= 1.0 {
        return None;
    }

    // lateral offset of the oncoming lane, measured where it overlaps the road
    let mut overlap: Vec<f64> = rev[..start]
        .iter()
        .zip(&beyond[..start])
        .filter(|(_, &b)| b > -20.0)
        .map(|(&q, _)| base.project(q).1)
        .collect();
    let offset = if overlap.is_empty() {
        dot(sub(tail[0], end), normal)
    } else {
        overlap.sort_by(f64::total_cmp);
        overlap[overlap.len() / 2]
    };

    let tail_line = Polyline::new(&tail).ok()?;
    let shifted: Vec<[f64; 2]> = tail
        .iter()
        .map(|&q| {
            let (s, _) = tail_line.project(q);
            let t = tail_line.tangent(s);
            [q[0] + t[1] * offset, q[1] - t[0] * offset]
        })
        .collect();
    let shifted_line = Polyline::new(&shifted).ok()?;
    let j = shifted
        .iter()
        .position(|&q| dot(sub(q, end), tangent) >= params.blend_length)
        .unwrap_or(shifted.len() - 1);
    let target = shifted[j];
    let target_tangent = shifted_line.tangent(shifted_line.project(target).0);
    let l = dist(end, target);
    let (ta, tb) = ([tangent[0] * l, tangent[1] * l], [target_tangent[0] * l, target_tangent[1] * l]);

    let mut poly: Vec<[f64; 2]> = (0..=200).map(|k| hermite(end, ta, target, tb, k as f64 / 200.0)).collect();
    poly.extend_from_slice(&shifted[j + 1..]);
    let line = Polyline::new(&poly).ok()?;
    let pts = resample(|s| line.at(s, 0.0), 0.0, line.length(), params.waypoint_spacing);
    Some((pts[1..].to_vec(), line.length(), tangent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> RoadParams {
        RoadParams::default()
    }

    #[test]
    fn straight_path_gives_straight_road() {
        let ego: Vec<[f64; 2]> = (0..=50).map(|i| [2.0 * i as f64, 0.0]).collect();
        let r = generate_road_from_points(&ego, &[], 2, 3.7, &params()).unwrap();
        assert!((r.road.length() - 100.0).abs() < 1e-6);
        assert!(r.road.centerline.iter().all(|p| p[1].abs() < 1e-9));
        assert!(r.road.violations().is_empty(), "{:?}", r.road.violations());
        assert!(r.junction.is_none());
    }

    #[test]
    fn short_path_rejected() {
        let ego: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 0.0]).collect();
        assert!(generate_road_from_points(&ego, &[], 2, 3.7, &params()).is_err());
    }

    #[test]
    fn oncoming_tail_extends_road() {
        let ego: Vec<[f64; 2]> = (0..=40).map(|i| [2.0 * i as f64, 0.0]).collect();
        // oncoming car in the opposite lane from x = 130 down to x = 40
        let onc: Vec<[f64; 2]> = (0..=90).map(|i| [130.0 - i as f64, 3.7]).collect();
        let r = generate_road_from_points(&ego, &[onc], 2, 3.7, &params()).unwrap();
        assert!(r.road.length() >= 80.0 + 50.0 - 1e-6, "{}", r.road.length());
        // recentred onto the ego lane
        assert!(r.road.centerline.iter().all(|p| p[1].abs() < 1e-6));
        let j = r.junction.unwrap();
        let angle = cross(j.base_tangent, j.extension_tangent).atan2(dot(j.base_tangent, j.extension_tangent));
        assert!(angle.abs() < 1e-3);
        assert!(r.road.violations().is_empty(), "{:?}", r.road.violations());
    }

    #[test]
    fn junction_is_tangent_continuous_on_a_curve() {
        // base heads along +x; oncoming path approaches along a gentle arc
        let ego: Vec<[f64; 2]> = (0..=30).map(|i| [2.0 * i as f64, 0.0]).collect();
        let onc: Vec<[f64; 2]> = (0..=120)
            .map(|i| {
                let x = 160.0 - i as f64;
                [x, 3.5 + 0.002 * (x - 60.0).max(0.0).powi(2)]
            })
            .collect();
        let r = generate_road_from_points(&ego, &[onc], 2, 3.7, &params()).unwrap();
        let j = r.junction.unwrap();
        let c = &r.road.centerline;
        // the Hermite blend leaves the junction along the base tangent
        let e = c[j.index];
        let first = hermite(e, j.base_tangent, c[c.len() - 1], j.extension_tangent, 1e-6);
        let dir = unit(sub(first, e));
        assert!(cross(j.base_tangent, dir).abs() < 1e-3);
        // and discrete headings turn gradually across the junction
        let h = |i: usize| unit(sub(c[i + 1], c[i]));
        let turn = cross(h(j.index - 1), h(j.index)).asin().abs();
        assert!(turn < 0.05, "{turn}");
        assert!(r.road.violations().is_empty(), "{:?}", r.road.violations());
    }

    #[test]
    fn tail_inside_ego_span_is_ignored() {
        let ego: Vec<[f64; 2]> = (0..=40).map(|i| [2.0 * i as f64, 0.0]).collect();
        let onc: Vec<[f64; 2]> = (0..=40).map(|i| [70.0 - i as f64, 3.7]).collect();
        let r = generate_road_from_points(&ego, &[onc], 2, 3.7, &params()).unwrap();
        assert!(r.junction.is_none());
        assert!((r.road.length() - 80.0).abs() < 1e-6);
    }

    #[test]
    fn nonmonotone_path_uses_parametric_fit() {
        // U-turn
        let ego: Vec<[f64; 2]> = (0..=60)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 60.0;
                [30.0 * a.sin(), 30.0 - 30.0 * a.cos()]
            })
            .collect();
        let r = generate_road_from_points(&ego, &[], 2, 3.7, &params()).unwrap();
        assert!(r.road.violations().is_empty(), "{:?}", r.road.violations());
        let last = r.road.centerline.last().unwrap();
        assert!(dist(*last, [0.0, 60.0]) < 1.0, "{last:?}");
    }

    #[test]
    fn violations_detected() {
        let mut road = RoadSpec { centerline: vec![[0.0, 0.0], [0.1, 0.0], [30.0, 0.0]], lane_count: 0, lane_width: 3.7 };
        let v = road.violations();
        assert_eq!(v.len(), 3, "{v:?}");
        road.centerline = vec![[0.0, 0.0], [10.0, 0.0], [10.0, 5.0], [5.0, -5.0]];
        road.lane_count = 1;
        assert!(road.violations().iter().any(|m| m.contains("intersect")));
    }

    #[test]
    fn polyline_frenet_round_trip() {
        let line = Polyline::new(&[[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]).unwrap();
        assert_eq!(line.at(5.0, 1.0), [5.0, 1.0]);
        let (s, d) = line.project([11.0, 5.0]);
        assert!((s - 15.0).abs() < 1e-12 && (d + 1.0).abs() < 1e-12);
        assert_eq!(line.at(25.0, 0.0), [10.0, 15.0]);
        assert_eq!(line.project([-3.0, 0.5]), (-3.0, 0.5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn regeneration_is_idempotent(
            len in 15.0f64..300.0, curv in -0.004f64..0.004, wobble in 0.0f64..0.8, phase in 0.0f64..6.0,
        ) {
            let n = (len / 1.5) as usize;
            let ego: Vec<[f64; 2]> = (0..=n).map(|i| {
                let x = len * i as f64 / n as f64;
                [x, curv * x * x + wobble * (x / 7.0 + phase).sin()]
            }).collect();
            let first = generate_road_from_points(&ego, &[], 2, 3.7, &params()).unwrap();
            let second = generate_road_from_points(&first.road.centerline, &[], 2, 3.7, &params()).unwrap();
            prop_assert_eq!(first.road.centerline.len(), second.road.centerline.len());
            for (a, b) in first.road.centerline.iter().zip(&second.road.centerline) {
                prop_assert!(dist(*a, *b) < 1e-6, "{:?} vs {:?}", a, b);
            }
        }
    }
}
