//! Category-specific completion of agent trajectories, so that every agent
//! covers the whole simulation.

use std::f64::consts::PI;

use super::road::{Polyline, RoadSpec};
use super::taxonomy::{ego_relative, AgentCategory, Classification};
use crate::trajectory::{estimate_speeds, normalize_angle, Pose2D, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtrapolationParams {
    /// Distance kept behind the ego by back-extrapolated overtakers, m.
    pub standoff: f64,
    /// Full opening angle of the forward camera wedge to stay out of, rad.
    pub fov: f64,
    /// Lateral separation below which two vehicles share a lane, m.
    pub same_lane_width: f64,
    /// Overtaken same-direction agents continue at most at this fraction of
    /// the ego's mean speed.
    pub overtaken_speed_factor: f64,
    /// Last observed speeds below this are treated as unreliable, m/s.
    pub min_plausible_speed: f64,
    /// Poses at the end of a track excluded when falling back to the mean
    /// speed.
    pub final_window: usize,
}

impl Default for ExtrapolationParams {
    fn default() -> Self {
        ExtrapolationParams {
            standoff: 8.0,
            fov: PI / 2.0,
            same_lane_width: 2.5,
            overtaken_speed_factor: 0.9,
            min_plausible_speed: 0.5,
            final_window: 5,
        }
    }
}

/// A completed vehicle trajectory ready for lead-in and export.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPlan {
    pub trajectory: Trajectory,
    pub start_delay: f64,
    pub warnings: Vec<String>,
}

/// Completes one trajectory according to its category. Poses carry video
/// frames; `last_frame` is the final simulated frame (inclusive).
pub fn extrapolate(
    agent: &Trajectory,
    class: &Classification,
    road: &RoadSpec,
    ego: &Trajectory,
    frame_rate: f64,
    last_frame: u32,
    params: &ExtrapolationParams,
) -> Result<AgentPlan> {
    if agent.poses.is_empty() {
        return Err(Error::Parameter(format!("agent {} has no poses", agent.vehicle_id)));
    }
    if !(frame_rate > 0.0) {
        return Err(Error::Parameter(format!("frame rate {frame_rate} must be positive")));
    }
    let first_ego = ego.first_frame().ok_or_else(|| Error::Parameter("ego trajectory is empty".into()))?;
    let mut warnings = Vec::new();
    let mut traj = agent.clone();
    traj.category = Some(class.category);
    let mut start_delay = 0.0;

    match class.category {
        AgentCategory::D0T2 => back_extrapolate(&mut traj, ego, frame_rate, params)?,
        AgentCategory::D0T3 | AgentCategory::D1T3 | AgentCategory::D1T4 => {
            start_delay = (agent.poses[0].frame - first_ego) as f64 / frame_rate;
        }
        _ => {}
    }

    let mut speed = plausible_speed(&traj, params);
    if class.same_direction && class.ego_passes {
        let ego_mean = ego.speeds.iter().sum::<f64>() / ego.speeds.len().max(1) as f64;
        speed = speed.min(params.overtaken_speed_factor * ego_mean);
    }
    let direction = if class.same_direction { 1.0 } else { -1.0 };
    extend_along_road(&mut traj, road, speed, direction, frame_rate, last_frame, &mut warnings)?;
    Ok(AgentPlan { trajectory: traj, start_delay, warnings })
}

/// Last observed speed, or the mean speed before the final window when the
/// last value is implausibly small (typically a collision).
fn plausible_speed(traj: &Trajectory, params: &ExtrapolationParams) -> f64 {
    let last = traj.speeds.last().copied().unwrap_or(0.0);
    if last >= params.min_plausible_speed {
        return last;
    }
    let n = traj.speeds.len();
    let head = if n > params.final_window { &traj.speeds[..n - params.final_window] } else { &traj.speeds[..] };
    if head.is_empty() {
        0.0
    } else {
        head.iter().sum::<f64>() / head.len() as f64
    }
}

/// Fills frames from the ego's first frame up to the agent's entry with
/// positions that shadow the ego: the ego-frame offset slides from
/// `standoff` behind to the observed entry offset and is clipped so the
/// agent stays outside the forward camera wedge.
fn back_extrapolate(traj: &mut Trajectory, ego: &Trajectory, frame_rate: f64, params: &ExtrapolationParams) -> Result<()> {
    let entry = traj.poses[0];
    let f0 = ego.first_frame().unwrap();
    if entry.frame <= f0 {
        return Ok(());
    }
    let [long_e, lat_e] = ego_relative(ego, &entry)?;
    let cap = if lat_e.abs() >= params.same_lane_width {
        lat_e.abs() / (params.fov / 2.0).tan()
    } else {
        -params.standoff
    };
    let span = (entry.frame - f0) as f64;
    let mut front = Vec::with_capacity((entry.frame - f0) as usize);
    for k in f0..entry.frame {
        let e = ego.pose_at(k).ok_or(Error::FrameMismatch(k))?;
        let s = (k - f0) as f64 / span;
        let long = ((1.0 - s) * -params.standoff + s * long_e).min(cap);
        let (sn, cs) = e.yaw.sin_cos();
        front.push(Pose2D {
            frame: k,
            t: e.t,
            x: e.x + cs * long - sn * lat_e,
            y: e.y + sn * long + cs * lat_e,
            yaw: e.yaw,
        });
    }
    front.extend_from_slice(&traj.poses);
    traj.poses = front;
    traj.speeds = if traj.poses.len() >= 2 { estimate_speeds(traj, frame_rate)? } else { vec![0.0] };
    Ok(())
}

fn extend_along_road(
    traj: &mut Trajectory,
    road: &RoadSpec,
    speed: f64,
    direction: f64,
    frame_rate: f64,
    last_frame: u32,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let last = *traj.poses.last().unwrap();
    if last.frame >= last_frame {
        return Ok(());
    }
    let line = Polyline::new(&road.centerline)?;
    let (s0, d) = line.project(last.position());
    let mut departed = false;
    for k in 1..=(last_frame - last.frame) {
        let s = s0 + direction * speed * k as f64 / frame_rate;
        if !departed && (s < 0.0 || s > line.length() || d.abs() > road.half_width()) {
            departed = true;
            warnings.push(format!(
                "vehicle {}: extension leaves the road at frame {}",
                traj.vehicle_id,
                last.frame + k
            ));
        }
        let [x, y] = line.at(s, d);
        let t = line.tangent(s);
        let mut yaw = t[1].atan2(t[0]);
        if direction < 0.0 {
            yaw = normalize_angle(yaw + PI);
        }
        traj.poses.push(Pose2D { frame: last.frame + k, t: last.t + k as f64 / frame_rate, x, y, yaw });
        traj.speeds.push(speed);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::taxonomy::{classify_agent, TaxonomyParams};

    fn straight(id: u32, frames: std::ops::Range<u32>, x0: f64, y: f64, v: f64, fps: f64) -> Trajectory {
        let poses: Vec<Pose2D> = frames
            .clone()
            .map(|f| Pose2D { frame: f, t: f as f64 / fps, x: x0 + v * f as f64 / fps, y, yaw: if v < 0.0 { PI } else { 0.0 } })
            .collect();
        let n = poses.len();
        Trajectory { speeds: vec![v.abs(); n], ..Trajectory::new(id, poses) }
    }

    fn road(len: f64) -> RoadSpec {
        RoadSpec {
            centerline: (0..=(len / 2.0) as usize).map(|i| [-100.0 + 2.0 * i as f64, 0.0]).collect(),
            lane_count: 2,
            lane_width: 3.7,
        }
    }

    fn plan(agent: &Trajectory, ego: &Trajectory, fps: f64, last: u32) -> AgentPlan {
        let c = classify_agent(agent, ego, &TaxonomyParams::default()).unwrap();
        extrapolate(agent, &c, &road(600.0), ego, fps, last, &ExtrapolationParams::default()).unwrap()
    }

    #[test]
    fn d0t1_observed_span_unchanged() {
        let ego = straight(0, 0..50, 0.0, 0.0, 15.0, 10.0);
        let a = straight(1, 0..50, 20.0, 0.0, 12.0, 10.0);
        let p = plan(&a, &ego, 10.0, 49);
        assert_eq!(p.trajectory.poses, a.poses);
        assert_eq!(p.start_delay, 0.0);
    }

    #[test]
    fn late_entries_get_start_delay() {
        let ego = straight(0, 0..120, 0.0, 0.0, 10.0, 15.0);
        let a = straight(1, 45..120, 150.0, 3.5, 5.0, 15.0);
        let p = plan(&a, &ego, 15.0, 119);
        assert_eq!(p.trajectory.category, Some(AgentCategory::D0T3));
        assert_eq!(p.start_delay, 3.0);
    }

    #[test]
    fn passed_oncoming_extends_at_last_speed() {
        let fps = 10.0;
        let ego = straight(0, 0..100, 0.0, 0.0, 10.0, fps);
        let a = straight(1, 0..40, 80.0, 3.7, -12.0, fps);
        let p = plan(&a, &ego, fps, 99);
        assert_eq!(p.trajectory.category, Some(AgentCategory::D1T1));
        let ext = &p.trajectory.poses[40..];
        assert_eq!(ext.len(), 60);
        let mut prev = p.trajectory.poses[39];
        for q in ext {
            let step = (q.x - prev.x).hypot(q.y - prev.y);
            assert!((step - 12.0 / fps).abs() < 1e-9, "{step}");
            assert!((q.y - 3.7).abs() < 1e-9);
            prev = *q;
        }
    }

    #[test]
    fn overtaken_agent_is_slower_than_ego() {
        let fps = 10.0;
        let ego = straight(0, 0..100, 0.0, 0.0, 20.0, fps);
        // parked car passed at frame ~20, last seen at frame 18
        let a = straight(1, 0..19, 40.0, -3.0, 0.0, fps);
        let mut moving = a.clone();
        moving.speeds = vec![25.0; moving.len()];
        let c = Classification {
            category: AgentCategory::D0T1,
            same_direction: true,
            in_first_frame: true,
            entered_behind: false,
            ego_passes: true,
        };
        let p = extrapolate(&moving, &c, &road(600.0), &ego, fps, 99, &ExtrapolationParams::default()).unwrap();
        assert!(p.trajectory.speeds[19..].iter().all(|&v| (v - 18.0).abs() < 1e-12));
    }

    #[test]
    fn implausible_last_speed_falls_back_to_earlier_mean() {
        let mut t = straight(1, 0..20, 0.0, 0.0, 10.0, 10.0);
        for v in &mut t.speeds[15..] {
            *v = 0.1;
        }
        assert_eq!(plausible_speed(&t, &ExtrapolationParams::default()), 10.0);
    }

    #[test]
    fn overtaker_shadows_ego_out_of_view() {
        let fps = 10.0;
        let ego = straight(0, 0..100, 0.0, 0.0, 20.0, fps);
        let a = straight(1, 30..100, -10.0, 3.7, 25.0, fps);
        let p = plan(&a, &ego, fps, 99);
        assert_eq!(p.trajectory.category, Some(AgentCategory::D0T2));
        assert_eq!(p.trajectory.first_frame(), Some(0));
        let params = ExtrapolationParams::default();
        for q in &p.trajectory.poses[..30] {
            let [long, lat] = ego_relative(&ego, q).unwrap();
            assert!(long <= lat.abs() / (params.fov / 2.0).tan() + 1e-9, "frame {}: {long} {lat}", q.frame);
            assert!(long.hypot(lat) > 3.0);
        }
        assert!((ego_relative(&ego, &p.trajectory.poses[0]).unwrap()[0] + 8.0).abs() < 1e-9);
        assert_eq!(p.trajectory.speeds.len(), p.trajectory.poses.len());
    }

    #[test]
    fn departure_is_a_warning() {
        let fps = 10.0;
        let ego = straight(0, 0..100, 0.0, 0.0, 20.0, fps);
        let a = straight(1, 0..100, 30.0, 0.0, 20.0, fps);
        let short = RoadSpec { centerline: vec![[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]], lane_count: 1, lane_width: 3.7 };
        let c = classify_agent(&a, &ego, &TaxonomyParams::default()).unwrap();
        let p = extrapolate(&a, &c, &short, &ego, fps, 150, &ExtrapolationParams::default()).unwrap();
        assert_eq!(p.trajectory.last_frame(), Some(150));
        assert_eq!(p.warnings.len(), 1);
    }
}
