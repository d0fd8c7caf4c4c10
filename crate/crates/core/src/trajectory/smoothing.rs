//! Two-level trajectory smoothing and gap handling.
//!
//! Coordinates are smoothed as functions of time. Stage one fits smoothing
//! splines on overlapping windows with a strong penalty and blends them with
//! linear (tent) weights; stage two fits one global spline with a weak
//! penalty to the blended result.

use super::savgol::savitzky_golay;
use super::spline::CubicSpline;
use super::{dist, normalize_angle, Pose2D, Trajectory};
use crate::{Error, Result};

/// Sub-samples per knot interval used for arc-length tables.
const ARC_SUBSTEPS: usize = 8;

/// Length scale, in frames, that the smoothness factors are relative to.
const PENALTY_SCALE_FRAMES: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingParams {
    pub sg_window: usize,
    pub sg_polyorder: usize,
    pub local_window: usize,
    pub local_smoothness: f64,
    pub global_smoothness: f64,
    /// Gaps of fewer missing frames than this are interpolated; longer gaps
    /// split the track.
    pub max_fill_gap: u32,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            sg_window: 11,
            sg_polyorder: 3,
            local_window: 25,
            local_smoothness: 5.0,
            global_smoothness: 0.5,
            max_fill_gap: 5,
        }
    }
}

/// Planar C² path `t -> (x(t), y(t))` with an arc-length table.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothTrajectory {
    pub source: u32,
    x: CubicSpline,
    y: CubicSpline,
    /// Cumulative arc length at `arc_t`.
    arc_t: Vec<f64>,
    arc_s: Vec<f64>,
}

impl SmoothTrajectory {
    fn new(source: u32, x: CubicSpline, y: CubicSpline) -> Self {
        let knots = x.knots();
        let mut arc_t = vec![knots[0]];
        let mut arc_s = vec![0.0];
        let mut prev = [x.eval(knots[0]), y.eval(knots[0])];
        for w in knots.windows(2) {
            for k in 1..=ARC_SUBSTEPS {
                let t = w[0] + (w[1] - w[0]) * k as f64 / ARC_SUBSTEPS as f64;
                let p = [x.eval(t), y.eval(t)];
                arc_s.push(arc_s.last().unwrap() + dist(prev, p));
                arc_t.push(t);
                prev = p;
            }
        }
        SmoothTrajectory { source, x, y, arc_t, arc_s }
    }

    pub fn knots(&self) -> &[f64] {
        self.x.knots()
    }

    /// Path positions at the knots.
    pub fn control_points(&self) -> Vec<[f64; 2]> {
        self.x.values().iter().zip(self.y.values()).map(|(&x, &y)| [x, y]).collect()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.x.domain()
    }

    pub fn position(&self, t: f64) -> [f64; 2] {
        [self.x.eval(t), self.y.eval(t)]
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        [self.x.derivative(t), self.y.derivative(t)]
    }

    /// Tangent heading; `None` where the path is (numerically) stationary.
    pub fn heading(&self, t: f64) -> Option<f64> {
        let [vx, vy] = self.velocity(t);
        (vx.hypot(vy) > 1e-6).then(|| normalize_angle(vy.atan2(vx)))
    }

    pub fn arc_length(&self) -> f64 {
        *self.arc_s.last().unwrap()
    }

    /// Arc length travelled from the start of the domain up to `t`.
    pub fn arc_at(&self, t: f64) -> f64 {
        interp_table(&self.arc_t, &self.arc_s, t)
    }

    /// Position at arc length `s` from the start (clamped to the path).
    pub fn position_at_arc(&self, s: f64) -> [f64; 2] {
        self.position(self.time_at_arc(s))
    }

    pub fn time_at_arc(&self, s: f64) -> f64 {
        interp_table(&self.arc_s, &self.arc_t, s)
    }

    /// Samples the path back onto the poses' frames, with tangent headings.
    /// Stationary stretches keep the previous heading.
    pub fn resample(&self, template: &Trajectory) -> Trajectory {
        let mut yaw = template.poses.first().map_or(0.0, |p| p.yaw);
        // seed with the first well-defined heading so a stationary start looks forward
        if let Some(h) = template.poses.iter().find_map(|p| self.heading(p.t)) {
            yaw = h;
        }
        let poses = template
            .poses
            .iter()
            .map(|p| {
                if let Some(h) = self.heading(p.t) {
                    yaw = h;
                }
                let [x, y] = self.position(p.t);
                Pose2D { frame: p.frame, t: p.t, x, y, yaw }
            })
            .collect();
        Trajectory { vehicle_id: template.vehicle_id, poses, speeds: template.speeds.clone(), category: template.category }
    }
}

/// Piecewise-linear lookup in a table whose `xs` are non-decreasing.
fn interp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    if x1 == x0 {
        return ys[i];
    }
    ys[i - 1] + (x - x0) / (x1 - x0) * (ys[i] - ys[i - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed {
    pub path: SmoothTrajectory,
    pub warning: Option<String>,
}

/// Penalty weight for a dimensionless smoothness factor. Scaling by the cube
/// of a multiple of the mean knot spacing makes the factor independent of
/// frame rate.
fn penalty(knots: &[f64], factor: f64) -> f64 {
    let span = knots.last().unwrap() - knots[0];
    let h = span / (knots.len() - 1).max(1) as f64;
    factor * (PENALTY_SCALE_FRAMES * h).powi(3)
}

fn fit(t: &[f64], v: &[f64], factor: f64) -> Result<CubicSpline> {
    CubicSpline::smoothing(t, v, None, penalty(t, factor))
}

/// Windowed stage: overlapping windows of `window` samples with 50% overlap.
fn local_stage(t: &[f64], v: &[f64], window: usize, factor: f64) -> Result<Vec<f64>> {
    let n = t.len();
    if n <= window {
        return Ok(fit(t, v, factor)?.values().to_vec());
    }
    let step = (window / 2).max(1);
    let mut starts: Vec<usize> = (0..).map(|k| k * step).take_while(|&s| s + window < n).collect();
    starts.push(n - window);
    let mut acc = vec![0.0; n];
    let mut wsum = vec![0.0; n];
    for &s in &starts {
        let spline = fit(&t[s..s + window], &v[s..s + window], factor)?;
        for (j, &val) in spline.values().iter().enumerate() {
            let i = s + j;
            // tent weights, but flat at the series ends so they are covered by one window
            let left = if s == 0 { f64::INFINITY } else { (j + 1) as f64 };
            let right = if s + window == n { f64::INFINITY } else { (window - j) as f64 };
            let w = left.min(right).min(window as f64);
            acc[i] += w * val;
            wsum[i] += w;
        }
    }
    Ok(acc.iter().zip(&wsum).map(|(a, w)| a / w).collect())
}

/// Two-level smoothing of a trajectory's positions against pose time.
pub fn smooth_two_level(
    traj: &Trajectory,
    local_window: usize,
    local_smoothness: f64,
    global_smoothness: f64,
) -> Result<Smoothed> {
    if !(global_smoothness >= 0.0 && local_smoothness > global_smoothness) {
        return Err(Error::Parameter(format!(
            "need local smoothness > global smoothness >= 0 (got {local_smoothness}, {global_smoothness})"
        )));
    }
    if traj.poses.is_empty() {
        return Err(Error::Parameter(format!("vehicle {} has no poses to smooth", traj.vehicle_id)));
    }
    let t: Vec<f64> = traj.poses.iter().map(|p| p.t).collect();
    let xs: Vec<f64> = traj.poses.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = traj.poses.iter().map(|p| p.y).collect();

    if traj.poses.len() < 4 {
        let x = fit(&t, &xs, global_smoothness)?;
        let y = fit(&t, &ys, global_smoothness)?;
        return Ok(Smoothed {
            path: SmoothTrajectory::new(traj.vehicle_id, x, y),
            warning: Some(format!(
                "vehicle {}: only {} poses, used a single global fit",
                traj.vehicle_id,
                traj.poses.len()
            )),
        });
    }
    if local_window < 4 {
        return Err(Error::Parameter(format!("local window {local_window} must be at least 4")));
    }
    let lx = local_stage(&t, &xs, local_window, local_smoothness)?;
    let ly = local_stage(&t, &ys, local_window, local_smoothness)?;
    let x = fit(&t, &lx, global_smoothness)?;
    let y = fit(&t, &ly, global_smoothness)?;
    Ok(Smoothed { path: SmoothTrajectory::new(traj.vehicle_id, x, y), warning: None })
}

/// Savitzky-Golay pre-filter followed by the two-level spline smoothing.
/// Short tracks use the largest odd window that fits; tracks too short for
/// any window above the polynomial order skip the pre-filter.
pub fn smooth_trajectory(traj: &Trajectory, params: &SmoothingParams) -> Result<Smoothed> {
    let n = traj.poses.len();
    let mut window = params.sg_window.min(if n % 2 == 1 { n } else { n.saturating_sub(1) });
    if window % 2 == 0 {
        window = window.saturating_sub(1);
    }
    let mut pre = traj.clone();
    if window > params.sg_polyorder && window >= 3 {
        let xs: Vec<f64> = traj.poses.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = traj.poses.iter().map(|p| p.y).collect();
        let sx = savitzky_golay(&xs, window, params.sg_polyorder)?;
        let sy = savitzky_golay(&ys, window, params.sg_polyorder)?;
        for ((p, x), y) in pre.poses.iter_mut().zip(sx).zip(sy) {
            p.x = x;
            p.y = y;
        }
    }
    smooth_two_level(&pre, params.local_window, params.local_smoothness, params.global_smoothness)
}

/// Fills short observation gaps by linear interpolation and splits the
/// trajectory at longer ones. A gap of `k` missing frames is filled when
/// `k < max_gap`. Segments keep the input's vehicle id; renumbering is up
/// to the caller.
pub fn fill_gaps(traj: &Trajectory, max_gap: u32) -> Vec<Trajectory> {
    let mut segments: Vec<Vec<Pose2D>> = Vec::new();
    let mut current: Vec<Pose2D> = Vec::new();
    for &pose in &traj.poses {
        if let Some(&prev) = current.last() {
            let missing = pose.frame - prev.frame - 1;
            if missing >= max_gap {
                segments.push(std::mem::take(&mut current));
            } else {
                for k in 1..=missing {
                    let s = k as f64 / (missing + 1) as f64;
                    current.push(Pose2D {
                        frame: prev.frame + k,
                        t: prev.t + s * (pose.t - prev.t),
                        x: prev.x + s * (pose.x - prev.x),
                        y: prev.y + s * (pose.y - prev.y),
                        yaw: prev.yaw,
                    });
                }
            }
        }
        current.push(pose);
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
        .into_iter()
        .map(|poses| Trajectory { category: traj.category, ..Trajectory::new(traj.vehicle_id, poses) })
        .collect()
}
