use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::trajectory::{normalize_angle, Pose2D, Trajectory};
use crate::Error;

/// D0 agents travel in the ego's direction, D1 agents oppose it. The T
/// subtype depends on how the agent enters the view and whether the ego passes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum AgentCategory {
    D0T1,
    D0T2,
    D0T3,
    D1T1,
    D1T2,
    D1T3,
    D1T4,
}

impl AgentCategory {
    pub const ALL: [AgentCategory; 7] = [
        AgentCategory::D0T1,
        AgentCategory::D0T2,
        AgentCategory::D0T3,
        AgentCategory::D1T1,
        AgentCategory::D1T2,
        AgentCategory::D1T3,
        AgentCategory::D1T4,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AgentCategory::D0T1 => "D0T1",
            AgentCategory::D0T2 => "D0T2",
            AgentCategory::D0T3 => "D0T3",
            AgentCategory::D1T1 => "D1T1",
            AgentCategory::D1T2 => "D1T2",
            AgentCategory::D1T3 => "D1T3",
            AgentCategory::D1T4 => "D1T4",
        }
    }

    pub fn same_direction(self) -> bool {
        matches!(self, AgentCategory::D0T1 | AgentCategory::D0T2 | AgentCategory::D0T3)
    }
}

impl fmt::Display for AgentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgentCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        AgentCategory::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown agent category {s:?}")))
    }
}

/// Thresholds of the classification rules.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaxonomyParams {
    /// Net displacement below which an agent's direction is undefined and
    /// it is treated as sharing the ego's direction (parked cars).
    pub min_displacement: f64,
    /// A same-direction agent that appears closer than this (ego-frame
    /// longitudinal, m) and pulls away entered from behind.
    pub near_entry: f64,
    /// An agent that leaves the view before the last frame while closer
    /// than this longitudinally has been passed by the ego.
    pub pass_margin: f64,
}

impl Default for TaxonomyParams {
    fn default() -> Self {
        TaxonomyParams { min_displacement: 1.0, near_entry: 15.0, pass_margin: 8.0 }
    }
}

/// Classification result with the facts it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub category: AgentCategory,
    pub same_direction: bool,
    pub in_first_frame: bool,
    pub entered_behind: bool,
    pub ego_passes: bool,
}

/// Agent position in the ego frame at the same frame: (longitudinal, lateral).
pub(crate) fn ego_relative(ego: &Trajectory, pose: &Pose2D) -> Result<[f64; 2], Error> {
    let e = ego.pose_at(pose.frame).ok_or(Error::FrameMismatch(pose.frame))?;
    let (s, c) = e.yaw.sin_cos();
    let (dx, dy) = (pose.x - e.x, pose.y - e.y);
    Ok([c * dx + s * dy, -s * dx + c * dy])
}

/// Assigns one of the seven categories. Direction compares the agent's net
/// displacement with the ego heading at the agent's first frame. An agent
/// is "in the first frame" when it is observed at the ego's first frame.
/// The ego passes an agent when the agent's ego-frame longitudinal
/// coordinate changes sign, or when the agent leaves the view before the
/// end of the clip while alongside the ego.
pub fn classify_agent(agent: &Trajectory, ego: &Trajectory, params: &TaxonomyParams) -> Result<Classification, Error> {
    let first = agent
        .poses
        .first()
        .ok_or_else(|| Error::Parameter(format!("agent {} is never visible", agent.vehicle_id)))?;
    let last = agent.poses.last().unwrap();
    let rel: Vec<[f64; 2]> = agent.poses.iter().map(|p| ego_relative(ego, p)).collect::<Result<_, _>>()?;

    let e0 = ego.pose_at(first.frame).unwrap();
    let (dx, dy) = (last.x - first.x, last.y - first.y);
    let same_direction =
        dx.hypot(dy) < params.min_displacement || normalize_angle(dy.atan2(dx) - e0.yaw).abs() < PI / 2.0;

    let in_first_frame = Some(first.frame) == ego.first_frame();
    let long0 = rel[0][0];
    let pulling_away = rel.len() >= 2 && rel[rel.len() - 1][0] > long0;
    let entered_behind = !in_first_frame && (long0 < 0.0 || (long0 < params.near_entry && pulling_away));

    let sign_change = rel.windows(2).any(|w| (w[0][0] > 0.0) != (w[1][0] > 0.0));
    let left_early = ego.last_frame().is_some_and(|f| last.frame < f);
    let ego_passes = sign_change || (left_early && rel[rel.len() - 1][0] < params.pass_margin);

    let category = match (same_direction, in_first_frame) {
        (true, true) => AgentCategory::D0T1,
        (true, false) if entered_behind => AgentCategory::D0T2,
        (true, false) => AgentCategory::D0T3,
        (false, true) if ego_passes => AgentCategory::D1T1,
        (false, true) => AgentCategory::D1T2,
        (false, false) if ego_passes => AgentCategory::D1T3,
        (false, false) => AgentCategory::D1T4,
    };
    Ok(Classification { category, same_direction, in_first_frame, entered_behind, ego_passes })
}
