//! Synthetic scene renderer: turns a scripted scene of cuboid vehicles on a
//! flat road into the pipeline's input files, using the same pinhole model
//! the pipeline inverts.
//!
//! Outputs in `output_dir`: `detections.jsonl`, `depth/%06d.pgm`,
//! `masks/%06d_%03d.png`, `lanes.jsonl`, `odometry.csv`, `ground_truth.csv`
//! and a matching `config.toml`. All world coordinates are written relative
//! to the ego pose at frame 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::pgm::{write_depth_pgm, KITTI_DEPTH_SCALE};
use crate::camera::{CameraIntrinsics, CameraMount, DepthMap, Point3};
use crate::lanes::io::lane_jsonl_line;
use crate::metrics::{format_tracks_csv, TrackPoint};
use crate::pipeline::{IntrinsicsSource, PipelineConfig};
use crate::tracking::{BBox2D, Detection};
use crate::trajectory::odometry::format_odometry_csv;
use crate::trajectory::{EgoMode, OdometryPose};
use crate::{Error, Result};

/// Lane markings are rendered out to this forward distance, m.
const LANE_RANGE: f64 = 80.0;
/// Half width of a rendered lane marking, pixels.
const LANE_HALF_WIDTH: i64 = 1;
/// Detections with fewer visible pixels are not emitted.
const MIN_MASK_PIXELS: usize = 20;

/// Planar motion of one body. When `waypoints` (`[t, x, y]` rows) is
/// non-empty it defines piecewise-linear motion over its time span;
/// otherwise the body starts at `start` at `t = 0` and moves along
/// `heading` with constant acceleration, stopping rather than reversing,
/// and is present from `appear` to `vanish` seconds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Motion {
    pub start: [f64; 2],
    pub heading: f64,
    pub speed: f64,
    pub accel: f64,
    pub appear: f64,
    pub vanish: Option<f64>,
    pub waypoints: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleScript {
    pub id: u32,
    /// Length, width, height in meters.
    #[serde(default = "default_size")]
    pub size: [f64; 3],
    pub motion: Motion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneScript {
    pub frame_rate: f64,
    pub frames: u32,
    #[serde(default = "default_camera_height")]
    pub camera_height: f64,
    /// Downward camera pitch, rad.
    #[serde(default)]
    pub pitch: f64,
    #[serde(default = "default_lane_width")]
    pub lane_width: f64,
    /// World y of every painted lane boundary (boundaries run along x).
    #[serde(default = "default_lane_lines")]
    pub lane_lines: Vec<f64>,
    pub ego: Motion,
    #[serde(default)]
    pub vehicles: Vec<VehicleScript>,
}

fn default_size() -> [f64; 3] {
    [4.5, 1.8, 1.5]
}

fn default_camera_height() -> f64 {
    1.65
}

fn default_lane_width() -> f64 {
    3.7
}

fn default_lane_lines() -> Vec<f64> {
    vec![1.85, -1.85]
}

impl SceneScript {
    pub fn from_toml(text: &str) -> Result<Self> {
        let script: SceneScript = toml::from_str(text).map_err(|e| Error::Script(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.frame_rate > 0.0) {
            problems.push(format!("frame_rate {} must be positive", self.frame_rate));
        }
        if self.frames == 0 {
            problems.push("frames must be at least 1".into());
        }
        if !(self.camera_height > 0.0) {
            problems.push(format!("camera_height {} must be positive", self.camera_height));
        }
        if !(self.lane_width > 0.0) {
            problems.push(format!("lane_width {} must be positive", self.lane_width));
        }
        let mut ids = std::collections::BTreeSet::new();
        check_motion("ego", &self.ego, &mut problems);
        for v in &self.vehicles {
            if v.id == 0 || !ids.insert(v.id) {
                problems.push(format!("vehicle id {} must be unique and nonzero", v.id));
            }
            if !v.size.iter().all(|s| *s > 0.0) {
                problems.push(format!("vehicle {}: size {:?} must be positive", v.id, v.size));
            }
            check_motion(&format!("vehicle {}", v.id), &v.motion, &mut problems);
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Script(problems.join("; ")))
        }
    }
}

fn check_motion(who: &str, m: &Motion, problems: &mut Vec<String>) {
    if m.waypoints.len() == 1 {
        problems.push(format!("{who}: waypoint motion needs at least two rows"));
    }
    if m.waypoints.windows(2).any(|w| !(w[1][0] > w[0][0])) {
        problems.push(format!("{who}: waypoint times must increase"));
    }
    if !(m.speed >= 0.0) {
        problems.push(format!("{who}: speed {} must be non-negative", m.speed));
    }
}

/// Pose `(x, y, yaw)` at time `t`, or `None` when the body is absent.
pub fn motion_pose(m: &Motion, t: f64) -> Option<(f64, f64, f64)> {
    if !m.waypoints.is_empty() {
        let w = &m.waypoints;
        let eps = 1e-9;
        if t < w[0][0] - eps || t > w[w.len() - 1][0] + eps {
            return None;
        }
        let i = w.partition_point(|r| r[0] <= t).clamp(1, w.len() - 1);
        let (a, b) = (w[i - 1], w[i]);
        let s = ((t - a[0]) / (b[0] - a[0])).clamp(0.0, 1.0);
        let (dx, dy) = (b[1] - a[1], b[2] - a[2]);
        let yaw = if dx.hypot(dy) > 1e-12 { dy.atan2(dx) } else { m.heading };
        return Some((a[1] + s * dx, a[2] + s * dy, yaw));
    }
    if t < m.appear - 1e-9 || m.vanish.is_some_and(|v| t > v + 1e-9) {
        return None;
    }
    let stop = if m.accel < 0.0 { m.speed / -m.accel } else { f64::INFINITY };
    let tt = t.min(stop);
    let s = m.speed * tt + 0.5 * m.accel * tt * tt;
    let (sin, cos) = m.heading.sin_cos();
    Some((m.start[0] + s * cos, m.start[1] + s * sin, m.heading))
}

/// What a frame looks like: vehicles present, in the ego frame.
struct FrameView {
    ego: (f64, f64, f64),
    /// (script index, center in ego frame `[fwd, left]`, relative yaw)
    bodies: Vec<(usize, [f64; 2], f64)>,
}

const SKY: u32 = 0;
const GROUND: u32 = 1;

/// Rendered depth (camera z, 0 for sky) and hit owner per pixel: `SKY`,
/// `GROUND` or `2 + script index`.
struct Render {
    depth: Vec<f64>,
    owner: Vec<u32>,
}

fn to_ego(ego: (f64, f64, f64), p: [f64; 2]) -> [f64; 2] {
    let (s, c) = ego.2.sin_cos();
    let (dx, dy) = (p[0] - ego.0, p[1] - ego.1);
    [c * dx + s * dy, -s * dx + c * dy]
}

/// Ray `origin + lambda * dir` against the box `[-l/2, l/2] x [-w/2, w/2] x
/// [0, h]`; smallest positive `lambda`.
fn ray_box(origin: [f64; 3], dir: [f64; 3], half: [f64; 2], height: f64) -> Option<f64> {
    let lo = [-half[0], -half[1], 0.0];
    let hi = [half[0], half[1], height];
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for k in 0..3 {
        if dir[k].abs() < 1e-15 {
            if origin[k] < lo[k] || origin[k] > hi[k] {
                return None;
            }
            continue;
        }
        let (a, b) = ((lo[k] - origin[k]) / dir[k], (hi[k] - origin[k]) / dir[k]);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
        if t0 > t1 {
            return None;
        }
    }
    (t0 > 0.0).then_some(t0)
}

fn render(view: &FrameView, script: &SceneScript, k: &CameraIntrinsics, mount: &CameraMount) -> Render {
    let n = k.width * k.height;
    let mut depth = vec![0.0; n];
    let mut owner = vec![SKY; n];
    let h = script.camera_height;
    for v in 0..k.height {
        for u in 0..k.width {
            let d = mount.level(Point3::new((u as f64 - k.cu) / k.fu, (v as f64 - k.cv) / k.fv, 1.0));
            // ego frame: forward, left, up; camera at height h
            let dir = [d.z, -d.x, -d.y];
            let mut best = f64::INFINITY;
            let mut who = SKY;
            if d.y > 0.0 {
                best = h / d.y;
                who = GROUND;
            }
            for &(idx, c, yaw) in &view.bodies {
                let size = script.vehicles[idx].size;
                let (s, co) = yaw.sin_cos();
                let rel = [-c[0], -c[1]];
                let origin = [co * rel[0] + s * rel[1], -s * rel[0] + co * rel[1], h];
                let bdir = [co * dir[0] + s * dir[1], -s * dir[0] + co * dir[1], dir[2]];
                if let Some(l) = ray_box(origin, bdir, [size[0] / 2.0, size[1] / 2.0], size[2]) {
                    if l < best {
                        best = l;
                        who = 2 + idx as u32;
                    }
                }
            }
            if who != SKY {
                depth[v * k.width + u] = best;
                owner[v * k.width + u] = who;
            }
        }
    }
    Render { depth, owner }
}

/// Image box of a body's eight corners, clipped to the image. Errors when a
/// corner lies behind the camera.
fn project_box(
    frame: u32,
    id: u32,
    center: [f64; 2],
    yaw: f64,
    size: [f64; 3],
    h: f64,
    k: &CameraIntrinsics,
    mount: &CameraMount,
) -> Result<Option<BBox2D>> {
    let (s, c) = yaw.sin_cos();
    let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (sx, sy, z) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
        .into_iter()
        .flat_map(|(a, b)| [(a, b, 0.0), (a, b, size[2])])
    {
        let (bx, by) = (sx * size[0] / 2.0, sy * size[1] / 2.0);
        let fwd = center[0] + c * bx - s * by;
        let left = center[1] + s * bx + c * by;
        let cam = mount.tilt(Point3::new(-left, h - z, fwd));
        let Some((u, v)) = k.project(cam) else {
            return Err(Error::Script(format!("vehicle {id} is behind the camera at frame {frame}")));
        };
        (u0, v0, u1, v1) = (u0.min(u), v0.min(v), u1.max(u), v1.max(v));
    }
    let (w, ht) = (k.width as f64, k.height as f64);
    let (u0, v0, u1, v1) = (u0.max(0.0), v0.max(0.0), u1.min(w), v1.min(ht));
    Ok(BBox2D::new(u0, v0, u1, v1).ok())
}

/// Top-left pixels of the lane markings visible on the ground.
fn lane_pixels(view: &FrameView, script: &SceneScript, k: &CameraIntrinsics, mount: &CameraMount, r: &Render) -> Vec<[f64; 2]> {
    let (s, c) = mount.pitch.sin_cos();
    let (sy, cy) = view.ego.2.sin_cos();
    let mut out = Vec::new();
    for row in 0..k.height {
        let dy = (row as f64 - k.cv) / k.fv;
        let down = dy * c + s;
        if down <= 0.0 {
            continue;
        }
        let lambda = script.camera_height / down;
        let fwd = lambda * (c - dy * s);
        if !(1.0..=LANE_RANGE).contains(&fwd) || cy.abs() < 1e-9 {
            continue;
        }
        for &b in &script.lane_lines {
            let left = (b - view.ego.1 - sy * fwd) / cy;
            let uc = (k.cu + k.fu * (-left) / lambda).round() as i64;
            for u in uc - LANE_HALF_WIDTH..=uc + LANE_HALF_WIDTH {
                if u < 0 || u >= k.width as i64 {
                    continue;
                }
                if r.owner[row * k.width + u as usize] == GROUND {
                    out.push([u as f64, row as f64]);
                }
            }
        }
    }
    out
}

/// What [`generate_synthetic`] wrote, for direct comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub ground_truth: Vec<TrackPoint>,
    pub odometry: Vec<OdometryPose>,
    pub detections: Vec<Detection>,
}

pub fn generate_synthetic(script: &SceneScript, intrinsics: &CameraIntrinsics, output_dir: &Path) -> Result<SyntheticScene> {
    script.validate()?;
    intrinsics.validate()?;
    let k = intrinsics;
    let mount = CameraMount { height: script.camera_height, pitch: script.pitch };
    for sub in ["depth", "masks"] {
        let dir = output_dir.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let origin = motion_pose(&script.ego, 0.0)
        .ok_or_else(|| Error::Script("ego must be present at frame 0".into()))?;
    let to_origin = |x: f64, y: f64| to_ego(origin, [x, y]);

    let mut odometry = Vec::new();
    let mut ground_truth = Vec::new();
    let mut detections = Vec::new();
    let mut lanes_jsonl = String::new();
    for frame in 0..script.frames {
        let t = frame as f64 / script.frame_rate;
        let ego = motion_pose(&script.ego, t)
            .ok_or_else(|| Error::Script(format!("ego is absent at frame {frame}")))?;
        let [ox, oy] = to_origin(ego.0, ego.1);
        odometry.push(OdometryPose { frame, x: ox, y: oy, yaw: crate::trajectory::normalize_angle(ego.2 - origin.2) });

        let mut view = FrameView { ego, bodies: Vec::new() };
        for (idx, v) in script.vehicles.iter().enumerate() {
            if let Some((x, y, yaw)) = motion_pose(&v.motion, t) {
                let [gx, gy] = to_origin(x, y);
                ground_truth.push(TrackPoint { frame, object_id: v.id, x: gx, y: gy });
                view.bodies.push((idx, to_ego(ego, [x, y]), yaw - ego.2));
            }
        }
        let r = render(&view, script, k, &mount);
        let depth = DepthMap::new(k.width, k.height, r.depth.clone())?;
        write_depth_pgm(&output_dir.join(format!("depth/{frame:06}.pgm")), &depth, KITTI_DEPTH_SCALE)?;

        for &(idx, center, yaw) in &view.bodies {
            let v = &script.vehicles[idx];
            let Some(bbox) = project_box(frame, v.id, center, yaw, v.size, script.camera_height, k, &mount)? else {
                continue;
            };
            let tag = 2 + idx as u32;
            let visible = r.owner.iter().filter(|o| **o == tag).count();
            if visible < MIN_MASK_PIXELS {
                continue;
            }
            let mask_file = format!("masks/{frame:06}_{:03}.png", v.id);
            let img = image::GrayImage::from_fn(k.width as u32, k.height as u32, |u, row| {
                image::Luma([if r.owner[row as usize * k.width + u as usize] == tag { 255 } else { 0 }])
            });
            let path = output_dir.join(&mask_file);
            img.save(&path).map_err(|e| Error::parse(&path, e))?;
            detections.push(Detection { frame, bbox, score: 1.0, mask_file: Some(mask_file), class: "car".into() });
        }
        let lanes = lane_pixels(&view, script, k, &mount, &r);
        if !lanes.is_empty() {
            lanes_jsonl.push_str(&lane_jsonl_line(frame, &lanes));
            lanes_jsonl.push('\n');
        }
    }

    let mut det_text = String::new();
    for d in &detections {
        let _ = writeln!(det_text, "{}", d.to_json_line());
    }
    let config = PipelineConfig {
        frame_rate: script.frame_rate,
        intrinsics_source: IntrinsicsSource::Config,
        focal: k.fu,
        principal_point: Some([k.cu, k.cv]),
        camera_height: script.camera_height,
        pitch: script.pitch,
        lane_width: script.lane_width,
        ego_mode: EgoMode::FromOdometry,
        ..PipelineConfig::default()
    };
    let files: BTreeMap<&str, String> = BTreeMap::from([
        ("detections.jsonl", det_text),
        ("lanes.jsonl", lanes_jsonl),
        ("odometry.csv", format_odometry_csv(&odometry)),
        ("ground_truth.csv", format_tracks_csv(&ground_truth)),
        ("config.toml", config.to_toml()),
    ]);
    for (name, text) in files {
        let path = output_dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(SyntheticScene { ground_truth, odometry, detections })
}
