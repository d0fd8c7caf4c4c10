//! Absolute world-frame trajectories of the ego and the observed agents,
//! with lane-based lateral correction and smoothing.

pub mod odometry;
mod savgol;
mod smoothing;
mod spline;

pub use savgol::savitzky_golay;
pub use smoothing::{fill_gaps, smooth_trajectory, smooth_two_level, SmoothTrajectory, Smoothed, SmoothingParams};
pub use spline::CubicSpline;

use std::f64::consts::PI;

use crate::camera::Point3;
use crate::lanes::LateralFix;
use crate::scenario::AgentCategory;
use crate::{Error, Result};

/// World pose: x along the initial ego heading, y to its left.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Pose2D {
    pub frame: u32,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2D {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn heading(&self) -> [f64; 2] {
        [self.yaw.cos(), self.yaw.sin()]
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub vehicle_id: u32,
    pub poses: Vec<Pose2D>,
    /// Speed magnitude per pose, m/s.
    pub speeds: Vec<f64>,
    pub category: Option<AgentCategory>,
}

impl Trajectory {
    pub fn new(vehicle_id: u32, poses: Vec<Pose2D>) -> Self {
        let speeds = vec![0.0; poses.len()];
        Trajectory { vehicle_id, poses, speeds, category: None }
    }

    pub fn first_frame(&self) -> Option<u32> {
        self.poses.first().map(|p| p.frame)
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.poses.last().map(|p| p.frame)
    }

    pub fn pose_at(&self, frame: u32) -> Option<&Pose2D> {
        self.poses.binary_search_by_key(&frame, |p| p.frame).ok().map(|i| &self.poses[i])
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Polyline length through the pose positions.
    pub fn path_length(&self) -> f64 {
        self.poses.windows(2).map(|w| dist(w[0].position(), w[1].position())).sum()
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgoMode {
    ConstantStraight,
    FromOdometry,
}

/// Odometry sample as read from `frame,x,y,yaw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryPose {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Ego trajectory over frames `0..frame_count`.
pub fn ego_trajectory(
    mode: EgoMode,
    odometry: Option<&[OdometryPose]>,
    speed: f64,
    frame_count: u32,
    frame_rate: f64,
) -> Result<Trajectory> {
    if !(frame_rate > 0.0) {
        return Err(Error::Parameter(format!("frame rate {frame_rate} must be positive")));
    }
    let poses: Vec<Pose2D> = match mode {
        EgoMode::ConstantStraight => {
            if !(speed >= 0.0) {
                return Err(Error::Parameter(format!("ego speed {speed} must be non-negative")));
            }
            (0..frame_count)
                .map(|k| {
                    let t = k as f64 / frame_rate;
                    Pose2D { frame: k, t, x: speed * t, y: 0.0, yaw: 0.0 }
                })
                .collect()
        }
        EgoMode::FromOdometry => {
            let odometry = odometry.ok_or_else(|| Error::Parameter("odometry mode needs odometry poses".into()))?;
            let by_frame: std::collections::BTreeMap<u32, &OdometryPose> =
                odometry.iter().map(|p| (p.frame, p)).collect();
            let missing: Vec<u32> = (0..frame_count).filter(|f| !by_frame.contains_key(f)).collect();
            if !missing.is_empty() {
                return Err(Error::MissingFrames(missing));
            }
            (0..frame_count)
                .map(|k| {
                    let p = by_frame[&k];
                    Pose2D { frame: k, t: k as f64 / frame_rate, x: p.x, y: p.y, yaw: normalize_angle(p.yaw) }
                })
                .collect()
        }
    };
    let mut traj = Trajectory::new(0, poses);
    if mode == EgoMode::ConstantStraight {
        traj.speeds = vec![speed; traj.len()];
    } else if traj.len() >= 2 {
        traj.speeds = estimate_speeds(&traj, frame_rate)?;
    }
    Ok(traj)
}

/// Result of [`apply_lane_correction`].
#[derive(Debug, Clone, PartialEq)]
pub struct LaneCorrection {
    pub trajectory: Trajectory,
    pub warning: Option<String>,
}

/// Replaces the ego's lateral coordinate at every fixed frame with the
/// lane-derived position. The left boundary of the ego lane is anchored at
/// its world position in the first fixed frame; boundary crossings (offset
/// jumps of more than half a lane) are unwrapped into whole-lane steps.
/// Frames between fixes interpolate linearly; frames outside the fixed span
/// keep the nearest correction. x is never modified.
pub fn apply_lane_correction(ego: &Trajectory, fixes: &[LateralFix], lane_width: f64) -> LaneCorrection {
    let mut fixes: Vec<LateralFix> = fixes.iter().filter(|f| ego.pose_at(f.frame).is_some()).copied().collect();
    if fixes.is_empty() {
        return LaneCorrection {
            trajectory: ego.clone(),
            warning: Some("no lateral lane fixes; ego lateral position left uncorrected".into()),
        };
    }
    fixes.sort_by_key(|f| f.frame);
    fixes.dedup_by_key(|f| f.frame);

    let mut unwrapped = Vec::with_capacity(fixes.len());
    let mut shift = 0.0;
    let mut prev: Option<f64> = None;
    for fix in &fixes {
        if let Some(p) = prev {
            let jump = fix.offset_in_lane - p;
            if jump > lane_width / 2.0 {
                shift -= lane_width;
            } else if jump < -lane_width / 2.0 {
                shift += lane_width;
            }
        }
        prev = Some(fix.offset_in_lane);
        unwrapped.push((fix.frame, fix.offset_in_lane + shift));
    }

    let first_pose = ego.pose_at(unwrapped[0].0).unwrap();
    let left_boundary_y = first_pose.y + unwrapped[0].1;
    // correction (lane y - odometry y) at fixed frames
    let deltas: Vec<(u32, f64)> = unwrapped
        .iter()
        .map(|&(f, off)| (f, left_boundary_y - off - ego.pose_at(f).unwrap().y))
        .collect();

    let mut out = ego.clone();
    for pose in &mut out.poses {
        let delta = match deltas.partition_point(|&(f, _)| f <= pose.frame) {
            0 => deltas[0].1,
            i if i == deltas.len() => deltas[i - 1].1,
            i => {
                let (f0, d0) = deltas[i - 1];
                let (f1, d1) = deltas[i];
                let s = (pose.frame - f0) as f64 / (f1 - f0) as f64;
                d0 + s * (d1 - d0)
            }
        };
        pose.y += delta;
    }
    LaneCorrection { trajectory: out, warning: None }
}

/// World positions of agent observations given in the (level) camera frame
/// of the ego at the same frame: camera z maps to ego forward and camera x
/// (right) to ego right, i.e. negative ego-left.
pub fn compose_agent_trajectory(vehicle_id: u32, ego: &Trajectory, relative: &[(u32, Point3)]) -> Result<Trajectory> {
    let mut sorted: Vec<(u32, Point3)> = relative.to_vec();
    sorted.sort_by_key(|r| r.0);
    let mut poses = Vec::with_capacity(sorted.len());
    for (frame, p) in sorted {
        let e = ego.pose_at(frame).ok_or(Error::FrameMismatch(frame))?;
        let (s, c) = e.yaw.sin_cos();
        let (fwd, left) = (p.z, -p.x);
        poses.push(Pose2D { frame, t: e.t, x: e.x + c * fwd - s * left, y: e.y + s * fwd + c * left, yaw: e.yaw });
    }
    Ok(Trajectory::new(vehicle_id, poses))
}

/// Central-difference speed magnitudes, one-sided at the ends. Pose times
/// are taken as `frame / frame_rate`.
pub fn estimate_speeds(traj: &Trajectory, frame_rate: f64) -> Result<Vec<f64>> {
    if !(frame_rate > 0.0) {
        return Err(Error::Parameter(format!("frame rate {frame_rate} must be positive")));
    }
    let n = traj.poses.len();
    if n < 2 {
        return Err(Error::Parameter("speed estimation needs at least two poses".into()));
    }
    let t = |i: usize| traj.poses[i].frame as f64 / frame_rate;
    let p = |i: usize| traj.poses[i].position();
    Ok((0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            dist(p(a), p(b)) / (t(b) - t(a))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fix(frame: u32, off: f64) -> LateralFix {
        LateralFix { frame, offset_in_lane: off, lane_width_px: 400.0, ego_lane_id: 1 }
    }

    #[test]
    fn constant_ego() {
        let e = ego_trajectory(EgoMode::ConstantStraight, None, 20.0, 5, 10.0).unwrap();
        let xs: Vec<f64> = e.poses.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert!(e.speeds.iter().all(|&s| s == 20.0));
        let still = ego_trajectory(EgoMode::ConstantStraight, None, 0.0, 5, 10.0).unwrap();
        assert!(still.poses.iter().all(|p| p.x == 0.0 && p.y == 0.0));
    }

    #[test]
    fn odometry_passthrough_and_gaps() {
        let odo: Vec<OdometryPose> = (0..4).map(|f| OdometryPose { frame: f, x: 0.0, y: 0.0, yaw: 0.0 }).collect();
        let e = ego_trajectory(EgoMode::FromOdometry, Some(&odo), 0.0, 4, 10.0).unwrap();
        assert!(e.poses.iter().all(|p| p.x == 0.0 && p.y == 0.0 && p.yaw == 0.0));
        assert_eq!(e.poses[3].t, 0.3);
        let partial = [odo[0], odo[2]];
        match ego_trajectory(EgoMode::FromOdometry, Some(&partial), 0.0, 4, 10.0) {
            Err(Error::MissingFrames(f)) => assert_eq!(f, vec![1, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lane_correction_constant_offset_is_identity() {
        let e = ego_trajectory(EgoMode::ConstantStraight, None, 20.0, 30, 10.0).unwrap();
        let fixes: Vec<LateralFix> = (0..30).map(|f| fix(f, 1.85)).collect();
        let c = apply_lane_correction(&e, &fixes, 3.7);
        assert_eq!(c.trajectory, e);
        assert!(c.warning.is_none());
    }

    #[test]
    fn lane_change_shifts_by_a_lane() {
        let e = ego_trajectory(EgoMode::ConstantStraight, None, 20.0, 30, 10.0).unwrap();
        // offset from the anchored left boundary grows 1.85 -> 5.55 over 20 frames
        let fixes: Vec<LateralFix> =
            (0..30).map(|f| fix(f, 1.85 + 3.7 * (f.min(20) as f64) / 20.0)).collect();
        let c = apply_lane_correction(&e, &fixes, 3.7).trajectory;
        let shift = c.poses[29].y - c.poses[0].y;
        assert!((shift + 3.7).abs() < 1e-12, "{shift}");
        for (a, b) in c.poses.iter().zip(&e.poses) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
        }
    }

    #[test]
    fn boundary_crossing_is_unwrapped() {
        let e = ego_trajectory(EgoMode::ConstantStraight, None, 20.0, 20, 10.0).unwrap();
        // drifting right: offset rises to ~3.6 then wraps to ~0.1 in the next lane
        let offs: Vec<f64> = (0..20).map(|f| (1.85 + 0.2 * f as f64) % 3.7).collect();
        let fixes: Vec<LateralFix> = offs.iter().enumerate().map(|(f, &o)| fix(f as u32, o)).collect();
        let c = apply_lane_correction(&e, &fixes, 3.7).trajectory;
        for (f, p) in c.poses.iter().enumerate() {
            assert!((p.y + 0.2 * f as f64).abs() < 1e-9, "frame {f}: {}", p.y);
        }
    }

    #[test]
    fn sparse_fixes_interpolate() {
        let e = ego_trajectory(EgoMode::ConstantStraight, None, 10.0, 11, 10.0).unwrap();
        let c = apply_lane_correction(&e, &[fix(2, 1.0), fix(6, 2.0)], 3.7).trajectory;
        // left boundary at y = 1.0; y = 1 - offset
        assert!((c.poses[0].y - 0.0).abs() < 1e-12);
        assert!((c.poses[4].y + 0.5).abs() < 1e-12);
        assert!((c.poses[10].y + 1.0).abs() < 1e-12);
        let none = apply_lane_correction(&e, &[], 3.7);
        assert!(none.warning.is_some());
        assert_eq!(none.trajectory, e);
    }

    #[test]
    fn compose_examples() {
        let ego = Trajectory::new(0, vec![Pose2D { frame: 0, t: 0.0, x: 0.0, y: 0.0, yaw: 0.0 }]);
        let a = compose_agent_trajectory(1, &ego, &[(0, Point3::new(0.0, 0.0, 10.0))]).unwrap();
        assert_eq!(a.poses[0].position(), [10.0, 0.0]);
        let b = compose_agent_trajectory(1, &ego, &[(0, Point3::new(2.0, 0.5, 10.0))]).unwrap();
        assert_eq!(b.poses[0].position(), [10.0, -2.0]);
        let turned = Trajectory::new(0, vec![Pose2D { frame: 0, t: 0.0, x: 5.0, y: 0.0, yaw: PI / 2.0 }]);
        let c = compose_agent_trajectory(1, &turned, &[(0, Point3::new(0.0, 0.0, 10.0))]).unwrap();
        assert!((c.poses[0].x - 5.0).abs() < 1e-12 && (c.poses[0].y - 10.0).abs() < 1e-12);
        assert!(matches!(
            compose_agent_trajectory(1, &ego, &[(3, Point3::new(0.0, 0.0, 1.0))]),
            Err(Error::FrameMismatch(3))
        ));
    }

    #[test]
    fn speed_examples() {
        let poses = (0..6).map(|f| Pose2D { frame: f, t: 0.0, x: 2.0 * f as f64, y: 0.0, yaw: 0.0 }).collect();
        let tr = Trajectory::new(1, poses);
        let s = estimate_speeds(&tr, 10.0).unwrap();
        assert!(s.iter().all(|v| (v - 20.0).abs() < 1e-12));
        let half = estimate_speeds(&tr, 5.0).unwrap();
        assert!(half.iter().zip(&s).all(|(h, v)| (h * 2.0 - v).abs() < 1e-12));
        let still = Trajectory::new(1, (0..3).map(|f| Pose2D { frame: f, t: 0.0, x: 1.0, y: 1.0, yaw: 0.0 }).collect());
        assert!(estimate_speeds(&still, 10.0).unwrap().iter().all(|&v| v == 0.0));
        assert!(estimate_speeds(&Trajectory::new(1, vec![still.poses[0]]), 10.0).is_err());
    }

    #[test]
    fn angles_normalize_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-15);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    fn arb_ego() -> impl Strategy<Value = Trajectory> {
        proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -3.0f64..3.0), 1..8).prop_map(|v| {
            Trajectory::new(
                0,
                v.into_iter()
                    .enumerate()
                    .map(|(i, (x, y, yaw))| Pose2D { frame: i as u32, t: i as f64 * 0.1, x, y, yaw })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn composition_is_rigid_equivariant(
            ego in arb_ego(), tx in -100.0f64..100.0, ty in -100.0f64..100.0, rot in -3.1f64..3.1,
            rel in proptest::collection::vec((-10.0f64..10.0, 1.0f64..80.0), 8),
        ) {
            let obs: Vec<(u32, Point3)> = ego.poses.iter().zip(&rel)
                .map(|(p, &(x, z))| (p.frame, Point3::new(x, 0.0, z))).collect();
            let (s, c) = rot.sin_cos();
            let mv = |x: f64, y: f64| (c * x - s * y + tx, s * x + c * y + ty);
            let mut moved = ego.clone();
            for p in &mut moved.poses {
                let (x, y) = mv(p.x, p.y);
                p.x = x; p.y = y; p.yaw += rot;
            }
            let a = compose_agent_trajectory(1, &ego, &obs).unwrap();
            let b = compose_agent_trajectory(1, &moved, &obs).unwrap();
            for (pa, pb) in a.poses.iter().zip(&b.poses) {
                let (x, y) = mv(pa.x, pa.y);
                prop_assert!((x - pb.x).abs() < 1e-9 && (y - pb.y).abs() < 1e-9);
            }
        }

        #[test]
        fn speeds_scale_with_positions(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..20), k in 0.1f64..10.0,
        ) {
            let mk = |k: f64| Trajectory::new(1, pts.iter().enumerate()
                .map(|(i, &(x, y))| Pose2D { frame: i as u32, t: 0.0, x: k * x, y: k * y, yaw: 0.0 }).collect());
            let a = estimate_speeds(&mk(1.0), 10.0).unwrap();
            let b = estimate_speeds(&mk(k), 10.0).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((k * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }
}
