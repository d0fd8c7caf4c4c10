//! End-to-end reconstruction of one scene directory:
//! detections and depth -> tracks -> 3D positions -> world trajectories ->
//! smoothing -> taxonomy -> road -> extrapolation -> scenario file.
//!
//! Input layout: `detections.jsonl`, `depth/%06d.pgm`, optional
//! `lanes.jsonl` or `lanes/%06d.png`, optional `odometry.csv`. Detections
//! may name a binary instance mask (`mask_file`, relative to the input
//! directory); without one the bounding box is used as the mask.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::camera::pgm::{read_depth_pgm, KITTI_DEPTH_SCALE};
use crate::camera::{
    backproject_masked, calibrate_from_lanes, estimate_position, CameraIntrinsics, CameraMount, DepthMap, PixelMask,
    Point3, DEFAULT_MAX_DEPTH,
};
use crate::lanes::{io::read_lanes, locate_ego, LaneObservation, LaneParams, LanePipeline, LateralFix};
use crate::metrics::{format_tracks_csv, TrackPoint};
use crate::scenario::{
    assemble_scenario, classify_agent, export_scenario, extrapolate, generate_road, AgentPlan, ExtrapolationParams,
    RoadParams, RoadSpec, ScenarioSpec, TaxonomyParams,
};
use crate::tracking::{read_detections, Detection, TrackSet, TrackerParams};
use crate::trajectory::odometry::read_odometry_csv;
use crate::trajectory::{
    apply_lane_correction, compose_agent_trajectory, ego_trajectory, estimate_speeds, fill_gaps, smooth_trajectory,
    EgoMode, OdometryPose, Pose2D, SmoothTrajectory, SmoothingParams, Trajectory,
};
use crate::{Error, Result};

/// Where the camera intrinsics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntrinsicsSource {
    /// `focal` and `principal_point` from the config.
    Config,
    /// Focal length and pitch from the ego lane boundaries; falls back to
    /// the config values when no frame calibrates.
    Calibrate,
    /// KITTI color camera intrinsics.
    DatasetDefault,
}

/// KITTI color camera focal length and principal point, pixels.
pub const KITTI_FOCAL: f64 = 721.5377;
pub const KITTI_PRINCIPAL_POINT: [f64; 2] = [609.5593, 172.854];

/// Every tunable of the pipeline. Parsed from TOML; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Video frame rate, Hz.
    pub frame_rate: f64,
    pub intrinsics_source: IntrinsicsSource,
    /// Focal length in pixels (square pixels).
    pub focal: f64,
    /// Principal point in pixels; the image center when absent.
    pub principal_point: Option<[f64; 2]>,
    /// Camera height above the road, m.
    pub camera_height: f64,
    /// Downward camera pitch, rad.
    pub pitch: f64,
    pub lane_width: f64,
    pub lane_count: u32,
    /// Lead-in acceleration, m/s^2.
    pub accel: f64,
    /// Depths beyond this are ignored, m.
    pub max_depth: f64,
    /// Meters per depth map unit.
    pub depth_scale: f64,
    pub ego_mode: EgoMode,
    /// Ego speed for `constant_straight`, m/s.
    pub ego_speed: f64,
    /// Correct the ego lateral position from lane boundaries when lanes are
    /// available.
    pub lane_correction: bool,
    /// The visible surface is this far in front of a vehicle's center, m.
    pub vehicle_half_length: f64,
    /// Tracks with fewer observed frames are dropped.
    pub min_track_frames: u32,
    /// Simulated duration, s; the clip duration when absent.
    pub sim_duration: Option<f64>,
    /// Scenes processed in parallel by [`run_many`].
    pub workers: usize,
    pub tracker: TrackerParams,
    pub lanes: LaneParams,
    pub smoothing: SmoothingParams,
    pub taxonomy: TaxonomyParams,
    pub road: RoadParams,
    pub extrapolation: ExtrapolationParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            frame_rate: 10.0,
            intrinsics_source: IntrinsicsSource::Config,
            focal: KITTI_FOCAL,
            principal_point: None,
            camera_height: 1.65,
            pitch: 0.0,
            lane_width: 3.7,
            lane_count: 2,
            accel: 2.0,
            max_depth: DEFAULT_MAX_DEPTH,
            depth_scale: KITTI_DEPTH_SCALE,
            ego_mode: EgoMode::FromOdometry,
            ego_speed: 0.0,
            lane_correction: true,
            vehicle_half_length: 2.25,
            min_track_frames: 3,
            sim_duration: None,
            workers: 1,
            tracker: TrackerParams::default(),
            lanes: LaneParams::default(),
            smoothing: SmoothingParams::default(),
            taxonomy: TaxonomyParams::default(),
            road: RoadParams::default(),
            extrapolation: ExtrapolationParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        let problems = config.violations();
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(problems.join("; "))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every field outside its documented range.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be positive"));
            }
        };
        positive("frame_rate", self.frame_rate);
        positive("focal", self.focal);
        positive("camera_height", self.camera_height);
        positive("lane_width", self.lane_width);
        positive("accel", self.accel);
        positive("max_depth", self.max_depth);
        positive("depth_scale", self.depth_scale);
        positive("tracker.iou_threshold", self.tracker.iou_threshold);
        positive("lanes.eps", self.lanes.eps);
        positive("lanes.max_cost", self.lanes.max_cost);
        positive("lanes.lower_fraction", self.lanes.lower_fraction);
        positive("road.knot_spacing", self.road.knot_spacing);
        positive("road.waypoint_spacing", self.road.waypoint_spacing);
        positive("road.blend_length", self.road.blend_length);
        positive("extrapolation.fov", self.extrapolation.fov);
        if let Some(d) = self.sim_duration {
            positive("sim_duration", d);
        }
        if !(self.pitch.abs() < std::f64::consts::FRAC_PI_4) {
            out.push(format!("pitch = {} must lie in (-pi/4, pi/4)", self.pitch));
        }
        if !(self.ego_speed >= 0.0) {
            out.push(format!("ego_speed = {} must be non-negative", self.ego_speed));
        }
        if !(self.vehicle_half_length >= 0.0) {
            out.push(format!("vehicle_half_length = {} must be non-negative", self.vehicle_half_length));
        }
        if self.tracker.iou_threshold > 1.0 {
            out.push(format!("tracker.iou_threshold = {} must be at most 1", self.tracker.iou_threshold));
        }
        if self.lanes.lower_fraction > 1.0 {
            out.push(format!("lanes.lower_fraction = {} must be at most 1", self.lanes.lower_fraction));
        }
        let counts = [
            ("lane_count", self.lane_count as usize),
            ("min_track_frames", self.min_track_frames as usize),
            ("workers", self.workers),
            ("tracker.birth_hits", self.tracker.birth_hits as usize),
            ("tracker.death_misses", self.tracker.death_misses as usize),
            ("lanes.min_pts", self.lanes.min_pts),
            ("smoothing.local_window", self.smoothing.local_window),
        ];
        for (name, v) in counts {
            if v == 0 {
                out.push(format!("{name} must be at least 1"));
            }
        }
        let s = &self.smoothing;
        if s.sg_window % 2 == 0 || s.sg_window <= s.sg_polyorder {
            out.push(format!("smoothing.sg_window = {} must be odd and exceed sg_polyorder", s.sg_window));
        }
        if !(s.local_smoothness > s.global_smoothness && s.global_smoothness >= 0.0) {
            out.push("smoothing.local_smoothness must exceed global_smoothness >= 0".into());
        }
        out
    }
}

pub fn read_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PipelineConfig::from_toml(&text).map_err(|m| Error::parse(path, m))
}

/// Counts and warnings gathered during a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub frames: u32,
    pub missing_depth_frames: Vec<u32>,
    pub detections: usize,
    pub tracks: usize,
    pub confirmed_tracks: usize,
    pub vehicles: usize,
    /// Observations without usable depth.
    pub dropped_observations: usize,
    pub intrinsics: Option<CameraIntrinsics>,
    pub pitch: f64,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "frames: {}", self.frames);
        let _ = writeln!(out, "missing depth frames: {:?}", self.missing_depth_frames);
        let _ = writeln!(out, "detections: {}", self.detections);
        let _ = writeln!(out, "tracks: {} ({} confirmed)", self.tracks, self.confirmed_tracks);
        let _ = writeln!(out, "vehicles exported: {}", self.vehicles);
        let _ = writeln!(out, "dropped observations: {}", self.dropped_observations);
        if let Some(k) = self.intrinsics {
            let _ = writeln!(
                out,
                "intrinsics: f={:.4} cu={:.4} cv={:.4} {}x{} pitch={:.6}",
                k.fu, k.cu, k.cv, k.width, k.height, self.pitch
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub scenario: ScenarioSpec,
    /// Smoothed world positions of the observed agents, observed frames only.
    pub tracks: Vec<TrackPoint>,
    /// Final trajectories, ego first.
    pub trajectories: Vec<Trajectory>,
    pub diagnostics: Diagnostics,
}

fn depth_frames(dir: &Path) -> Result<BTreeMap<u32, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_none_or(|e| e != "pgm") {
            continue;
        }
        if let Some(frame) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u32>().ok()) {
            out.insert(frame, path);
        }
    }
    Ok(out)
}

fn lanes_source(input: &Path) -> Option<PathBuf> {
    let jsonl = input.join("lanes.jsonl");
    let dir = input.join("lanes");
    if jsonl.is_file() {
        Some(jsonl)
    } else if dir.is_dir() {
        Some(dir)
    } else {
        None
    }
}

fn load_mask(input: &Path, det: &Detection, width: usize, height: usize, diag: &mut Diagnostics) -> Result<PixelMask> {
    let b = det.bbox;
    let from_box = || PixelMask::from_box(width, height, b.u_min, b.v_min, b.u_max, b.v_max);
    let Some(name) = &det.mask_file else {
        return Ok(from_box());
    };
    let path = input.join(name);
    let img = image::open(&path).map_err(|e| Error::parse(&path, e))?.into_luma8();
    if img.width() as usize != width || img.height() as usize != height {
        diag.warn(format!("{}: mask size differs from depth map; using the bounding box", path.display()));
        return Ok(from_box());
    }
    PixelMask::new(width, height, img.pixels().map(|p| p.0[0] != 0).collect())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Intrinsics and pitch according to the configured source.
fn resolve_camera(
    config: &PipelineConfig,
    width: usize,
    height: usize,
    lanes: &BTreeMap<u32, Vec<LaneObservation>>,
    diag: &mut Diagnostics,
) -> Result<(CameraIntrinsics, f64)> {
    let center = [width as f64 / 2.0, height as f64 / 2.0];
    let from_config = || {
        let [cu, cv] = config.principal_point.unwrap_or(center);
        CameraIntrinsics::new(config.focal, config.focal, cu, cv, width, height)
    };
    match config.intrinsics_source {
        IntrinsicsSource::Config => Ok((from_config()?, config.pitch)),
        IntrinsicsSource::DatasetDefault => {
            let [cu, cv] = KITTI_PRINCIPAL_POINT;
            let k = CameraIntrinsics::new(KITTI_FOCAL, KITTI_FOCAL, cu, cv, width, height)
                .or_else(|_| CameraIntrinsics::centered(KITTI_FOCAL, width, height))?;
            Ok((k, config.pitch))
        }
        IntrinsicsSource::Calibrate => {
            let (mut focals, mut pitches) = (Vec::new(), Vec::new());
            for obs in lanes.values() {
                let Some((l, r)) = ego_lane_lines(obs, center[0]) else { continue };
                if let Ok(c) = calibrate_from_lanes(l.line, r.line, config.lane_width, config.camera_height, width, height) {
                    focals.push(c.intrinsics.fu);
                    pitches.push(c.pitch);
                }
            }
            if focals.is_empty() {
                diag.warn("lane calibration failed in every frame; using configured intrinsics".into());
                return Ok((from_config()?, config.pitch));
            }
            let f = median(&mut focals);
            Ok((CameraIntrinsics::centered(f, width, height)?, median(&mut pitches)))
        }
    }
}

/// Nearest boundaries left and right of column `u` at the bottom row.
fn ego_lane_lines(obs: &[LaneObservation], u: f64) -> Option<(&LaneObservation, &LaneObservation)> {
    let left = obs.iter().filter(|o| o.x_intercept() <= u).max_by(|a, b| a.x_intercept().total_cmp(&b.x_intercept()))?;
    let right = obs.iter().filter(|o| o.x_intercept() > u).min_by(|a, b| a.x_intercept().total_cmp(&b.x_intercept()))?;
    Some((left, right))
}

/// Moves a visible-surface centroid back along the horizontal viewing ray
/// by `half_length`, towards the vehicle center.
fn correct_surface_bias(p: Point3, half_length: f64) -> Point3 {
    let r = p.x.hypot(p.z);
    if r < 1e-9 {
        return p;
    }
    Point3::new(p.x + half_length * p.x / r, p.y, p.z + half_length * p.z / r)
}

/// Smooths a trajectory and re-derives speeds. Too-short tracks are
/// returned unchanged with a warning.
fn smooth_with_speeds(
    traj: &Trajectory,
    config: &PipelineConfig,
    diag: &mut Diagnostics,
) -> Result<(Trajectory, Option<SmoothTrajectory>)> {
    if traj.len() < 2 {
        let mut t = traj.clone();
        t.speeds = vec![0.0; t.len()];
        return Ok((t, None));
    }
    let smoothed = smooth_trajectory(traj, &config.smoothing)?;
    if let Some(w) = smoothed.warning {
        diag.warn(format!("vehicle {}: {w}", traj.vehicle_id));
    }
    let mut out = smoothed.path.resample(traj);
    out.speeds = estimate_speeds(&out, config.frame_rate)?;
    Ok((out, Some(smoothed.path)))
}

/// Straight continuation of `traj` at its final speed and heading.
fn extend_straight(traj: &mut Trajectory, last_frame: u32, frame_rate: f64) {
    let Some(&last) = traj.poses.last() else { return };
    let speed = traj.speeds.last().copied().unwrap_or(0.0);
    let (s, c) = last.yaw.sin_cos();
    for k in 1..=last_frame.saturating_sub(last.frame) {
        let d = speed * k as f64 / frame_rate;
        traj.poses.push(Pose2D { frame: last.frame + k, t: last.t + k as f64 / frame_rate, x: last.x + c * d, y: last.y + s * d, ..last });
        traj.speeds.push(speed);
    }
}

/// Adds straight run-outs of `length` before the first and after the last
/// centerline point, continuing the end tangents.
fn extend_road(road: &mut RoadSpec, length: f64, spacing: f64) {
    let pts = &road.centerline;
    if pts.len() < 2 || length <= 0.0 {
        return;
    }
    let n = (length / spacing).ceil() as usize;
    let dir = |a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l = dx.hypot(dy);
        [dx / l, dy / l]
    };
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let back = dir(pts[1], first);
    let front = dir(pts[pts.len() - 2], last);
    let mut out: Vec<[f64; 2]> =
        (1..=n).rev().map(|k| [first[0] + back[0] * spacing * k as f64, first[1] + back[1] * spacing * k as f64]).collect();
    out.extend_from_slice(pts);
    out.extend((1..=n).map(|k| [last[0] + front[0] * spacing * k as f64, last[1] + front[1] * spacing * k as f64]));
    road.centerline = out;
}

/// Reconstructs one scene without writing anything.
pub fn reconstruct(input: &Path, config: &PipelineConfig) -> Result<PipelineOutput> {
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::Parameter(problems.join("; ")));
    }
    let fps = config.frame_rate;
    let mut diag = Diagnostics::default();

    let det_path = input.join("detections.jsonl");
    if !det_path.is_file() {
        return Err(Error::Parameter(format!("missing mandatory input {}", det_path.display())));
    }
    let depth_dir = input.join("depth");
    if !depth_dir.is_dir() {
        return Err(Error::Parameter(format!("missing mandatory input directory {}", depth_dir.display())));
    }
    let depth_files = depth_frames(&depth_dir)?;
    let Some((&last_depth, first_path)) = depth_files.iter().next_back() else {
        return Err(Error::Parameter(format!("{} holds no .pgm depth frames", depth_dir.display())));
    };
    let first_depth = read_depth_pgm(first_path, config.depth_scale)?;
    let (width, height) = (first_depth.width(), first_depth.height());
    drop(first_depth);

    let detections = read_detections(&det_path)?;
    diag.detections = detections.values().map(Vec::len).sum();
    let last_det = detections.keys().next_back().copied().unwrap_or(0);
    let frame_count = last_depth.max(last_det) + 1;
    diag.frames = frame_count;
    diag.missing_depth_frames = (0..frame_count).filter(|f| !depth_files.contains_key(f)).collect();
    if !diag.missing_depth_frames.is_empty() {
        diag.warn(format!(
            "{} frames have no depth map; their detections are skipped",
            diag.missing_depth_frames.len()
        ));
    }

    // lanes
    let mut lane_obs: BTreeMap<u32, Vec<LaneObservation>> = BTreeMap::new();
    if let Some(src) = lanes_source(input) {
        let pixels = read_lanes(&src, height)?;
        let mut lp = LanePipeline::new(config.lanes, width, height);
        for (&frame, px) in &pixels {
            lane_obs.insert(frame, lp.process_frame(frame, px));
        }
    }
    let (intrinsics, pitch) = resolve_camera(config, width, height, &lane_obs, &mut diag)?;
    diag.intrinsics = Some(intrinsics);
    diag.pitch = pitch;
    let mount = CameraMount { height: config.camera_height, pitch };

    // ego
    let odometry = match config.ego_mode {
        EgoMode::FromOdometry => {
            let path = input.join("odometry.csv");
            if !path.is_file() {
                return Err(Error::Parameter(format!(
                    "ego_mode from_odometry needs {}",
                    path.display()
                )));
            }
            let raw = read_odometry_csv(&path)?;
            Some(rebase_odometry(&raw))
        }
        EgoMode::ConstantStraight => None,
    };
    let mut ego = ego_trajectory(config.ego_mode, odometry.as_deref(), config.ego_speed, frame_count, fps)?;
    if config.lane_correction && !lane_obs.is_empty() {
        let fixes: Vec<LateralFix> = lane_obs
            .iter()
            .filter_map(|(&f, obs)| locate_ego(f, obs, intrinsics.cu, config.lane_width))
            .collect();
        let corrected = apply_lane_correction(&ego, &fixes, config.lane_width);
        if let Some(w) = corrected.warning {
            diag.warn(w);
        }
        ego = corrected.trajectory;
    }
    let (mut ego, ego_path) = smooth_with_speeds(&ego, config, &mut diag)?;

    // tracking
    let mut tracks = TrackSet::new(config.tracker);
    let empty = Vec::new();
    for frame in 0..frame_count {
        tracks.update(frame, detections.get(&frame).unwrap_or(&empty));
    }
    let tracks = tracks.into_tracks();
    diag.tracks = tracks.len();
    let confirmed: Vec<_> = tracks.into_iter().filter(|t| t.confirmed).collect();
    diag.confirmed_tracks = confirmed.len();

    // 3D positions, one depth map at a time
    let mut wanted: BTreeMap<u32, Vec<(usize, &Detection)>> = BTreeMap::new();
    for (i, t) in confirmed.iter().enumerate() {
        for (&f, d) in &t.history {
            wanted.entry(f).or_default().push((i, d));
        }
    }
    let mut relative: Vec<Vec<(u32, Point3)>> = vec![Vec::new(); confirmed.len()];
    for (&frame, dets) in &wanted {
        let Some(path) = depth_files.get(&frame) else {
            diag.dropped_observations += dets.len();
            continue;
        };
        let depth: DepthMap = read_depth_pgm(path, config.depth_scale)?;
        if depth.width() != width || depth.height() != height {
            return Err(Error::Shape(format!("{}: depth map size differs from frame {}", path.display(), last_depth)));
        }
        for &(i, det) in dets {
            let mask = load_mask(input, det, width, height, &mut diag)?;
            let cloud = backproject_masked(&depth, &mask, &intrinsics, config.max_depth)?;
            match estimate_position(&cloud) {
                Ok(p) => {
                    let level = correct_surface_bias(mount.level(p), config.vehicle_half_length);
                    relative[i].push((frame, level));
                }
                Err(_) => diag.dropped_observations += 1,
            }
        }
    }

    // world trajectories
    let mut next_id = confirmed.iter().map(|t| t.id).max().unwrap_or(0) + 1;
    let mut agents: Vec<(Trajectory, SmoothTrajectory)> = Vec::new();
    for (track, obs) in confirmed.iter().zip(&relative) {
        if obs.len() < config.min_track_frames as usize {
            diag.warn(format!("track {}: {} usable frames, dropped", track.id, obs.len()));
            continue;
        }
        let raw = compose_agent_trajectory(track.id, &ego, obs)?;
        for (k, mut seg) in fill_gaps(&raw, config.smoothing.max_fill_gap).into_iter().enumerate() {
            if k > 0 {
                diag.warn(format!("track {}: gap split, segment renumbered {next_id}", track.id));
                seg.vehicle_id = next_id;
                next_id += 1;
            }
            if seg.len() < config.min_track_frames as usize {
                diag.warn(format!("vehicle {}: segment of {} frames dropped", seg.vehicle_id, seg.len()));
                continue;
            }
            let (smooth, path) = smooth_with_speeds(&seg, config, &mut diag)?;
            agents.push((smooth, path.expect("segments have at least two poses")));
        }
    }
    let observed: Vec<TrackPoint> = agents
        .iter()
        .flat_map(|(t, _)| t.poses.iter().map(|p| TrackPoint { frame: p.frame, object_id: t.vehicle_id, x: p.x, y: p.y }))
        .collect();

    // simulation span
    let clip_last = ego.last_frame().unwrap_or(0);
    let last_frame = match config.sim_duration {
        Some(d) => clip_last.max(((d * fps).ceil() as u32).saturating_sub(1)),
        None => clip_last,
    };
    extend_straight(&mut ego, last_frame, fps);

    // taxonomy and road
    let mut classified = Vec::new();
    for (traj, path) in agents {
        let class = classify_agent(&traj, &ego, &config.taxonomy)?;
        classified.push((traj, path, class));
    }
    let oncoming: Vec<SmoothTrajectory> =
        classified.iter().filter(|(_, _, c)| !c.same_direction).map(|(_, p, _)| p.clone()).collect();
    let mut road = match ego_path.as_ref().map(|p| generate_road(p, &oncoming, config.lane_count, config.lane_width, &config.road)) {
        Some(Ok(build)) => build.road,
        other => {
            if let Some(Err(e)) = other {
                diag.warn(format!("road generation failed ({e}); using a straight road along the initial heading"));
            }
            let p0 = ego.poses[0];
            let (s, c) = p0.yaw.sin_cos();
            let step = config.road.waypoint_spacing;
            RoadSpec {
                centerline: (-1..=1).map(|k| [p0.x + c * step * k as f64, p0.y + s * step * k as f64]).collect(),
                lane_count: config.lane_count,
                lane_width: config.lane_width,
            }
        }
    };
    let vmax = ego
        .speeds
        .iter()
        .chain(classified.iter().flat_map(|(t, _, _)| t.speeds.iter()))
        .fold(1.0f64, |a, b| a.max(*b));
    let sim_time = (last_frame + 1) as f64 / fps;
    extend_road(&mut road, vmax * (sim_time + vmax / config.accel) + 20.0, config.road.waypoint_spacing);

    let mut plans: Vec<AgentPlan> = Vec::new();
    for (traj, _, class) in &classified {
        let plan = extrapolate(traj, class, &road, &ego, fps, last_frame, &config.extrapolation)?;
        for w in &plan.warnings {
            diag.warn(w.clone());
        }
        plans.push(plan);
    }
    if plans.is_empty() {
        diag.warn("no vehicles reconstructed; the scenario holds the ego only".into());
    }

    let mut meta = Map::new();
    meta.insert(
        "camera".into(),
        serde_json::json!({
            "focal": intrinsics.fu,
            "principal_point": [intrinsics.cu, intrinsics.cv],
            "image_size": [width, height],
            "height": config.camera_height,
            "pitch": pitch,
        }),
    );
    meta.insert("video_frames".into(), Value::from(frame_count));
    let scenario = assemble_scenario(&ego, &plans, road, fps, config.accel, meta)?;
    diag.vehicles = scenario.vehicles.len();

    let mut trajectories = vec![ego];
    trajectories.extend(plans.into_iter().map(|p| p.trajectory));
    Ok(PipelineOutput { scenario, tracks: observed, trajectories, diagnostics: diag })
}

/// Expresses odometry relative to its first pose.
fn rebase_odometry(raw: &[OdometryPose]) -> Vec<OdometryPose> {
    let Some(o) = raw.iter().min_by_key(|p| p.frame).copied() else { return Vec::new() };
    let (s, c) = o.yaw.sin_cos();
    raw.iter()
        .map(|p| {
            let (dx, dy) = (p.x - o.x, p.y - o.y);
            OdometryPose {
                frame: p.frame,
                x: c * dx + s * dy,
                y: -s * dx + c * dy,
                yaw: crate::trajectory::normalize_angle(p.yaw - o.yaw),
            }
        })
        .collect()
}

/// Files written next to the scenario file `<stem>.json`.
pub struct OutputPaths {
    pub scenario: PathBuf,
    pub tracks: PathBuf,
    pub diagnostics: PathBuf,
    pub vehicles: PathBuf,
}

impl OutputPaths {
    pub fn for_scenario(path: &Path) -> Self {
        let stem = path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
        let sibling = |suffix: &str| path.with_file_name(format!("{stem}{suffix}"));
        OutputPaths {
            scenario: path.to_path_buf(),
            tracks: sibling("_tracks.csv"),
            diagnostics: sibling("_diagnostics.log"),
            vehicles: sibling("_vehicles"),
        }
    }
}

fn vehicle_csv(traj: &Trajectory) -> String {
    let mut out = String::from("frame,t,x,y,yaw,speed\n");
    for (p, v) in traj.poses.iter().zip(&traj.speeds) {
        let _ = writeln!(out, "{},{:.6},{:.6},{:.6},{:.6},{:.6}", p.frame, p.t, p.x, p.y, p.yaw, v);
    }
    out
}

/// Reconstructs `input` and writes the scenario to `output`, with the
/// sidecar files of [`OutputPaths`] beside it.
pub fn run_pipeline(input: &Path, config: &PipelineConfig, output: &Path) -> Result<PipelineOutput> {
    let result = reconstruct(input, config)?;
    let paths = OutputPaths::for_scenario(output);
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    export_scenario(&result.scenario, &paths.scenario)?;
    let write = |path: &Path, text: String| std::fs::write(path, text).map_err(|e| Error::io(path, e));
    write(&paths.tracks, format_tracks_csv(&result.tracks))?;
    write(&paths.diagnostics, result.diagnostics.to_text())?;
    if paths.vehicles.is_dir() {
        std::fs::remove_dir_all(&paths.vehicles).map_err(|e| Error::io(&paths.vehicles, e))?;
    }
    std::fs::create_dir_all(&paths.vehicles).map_err(|e| Error::io(&paths.vehicles, e))?;
    for t in &result.trajectories {
        write(&paths.vehicles.join(format!("vehicle_{:03}.csv", t.vehicle_id)), vehicle_csv(t))?;
    }
    Ok(result)
}

/// Runs independent scenes on `config.workers` threads. Results are in job
/// order.
pub fn run_many(jobs: &[(PathBuf, PathBuf)], config: &PipelineConfig) -> Vec<Result<PipelineOutput>> {
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<PipelineOutput>>>> =
        jobs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..config.workers.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some((input, output)) = jobs.get(i) else { break };
                let r = run_pipeline(input, config, output);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("every job ran")).collect()
}
