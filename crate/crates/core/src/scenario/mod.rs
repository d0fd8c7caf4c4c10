//! Agent taxonomy, extrapolation, road generation, lead-in synchronization
//! and scenario export.

mod extrapolate;
mod road;
mod spec;
mod stepback;
mod taxonomy;

pub use extrapolate::{extrapolate, AgentPlan, ExtrapolationParams};
pub use road::{generate_road, generate_road_from_points, Junction, Polyline, RoadBuild, RoadParams, RoadSpec};
pub use spec::{
    check_overlaps, export_scenario, import_scenario, Conflict, ScenarioSpec, VehicleSpec, CONTINUITY_GAP,
    EGO_CATEGORY,
};
pub(crate) use spec::write_atomic;
#[cfg(test)]
pub(crate) use spec::tests::sample as sample_scenario;
pub use stepback::{build_leadin, compute_stepback, integrate_speeds, LeadIn, StepBack, StepBackEntry};
pub use taxonomy::{classify_agent, AgentCategory, Classification, TaxonomyParams};

use serde_json::{Map, Value};

use crate::trajectory::Trajectory;
use crate::{Error, Result};

/// First frame at which any agent comes within `threshold` of the ego, or
/// the ego's last frame.
pub fn collision_frame(ego: &Trajectory, agents: &[Trajectory], threshold: f64) -> Option<u32> {
    let mut hits = agents.iter().filter_map(|a| {
        a.poses.iter().find_map(|p| {
            let e = ego.pose_at(p.frame)?;
            ((p.x - e.x).hypot(p.y - e.y) < threshold).then_some(p.frame)
        })
    });
    hits.by_ref().min().or_else(|| ego.last_frame())
}

/// Builds the scenario: one vehicle per trajectory (the ego first, as id 0),
/// each with a lead-in that merges into its first waypoint at `t_s_max`.
pub fn assemble_scenario(
    ego: &Trajectory,
    agents: &[AgentPlan],
    road: RoadSpec,
    frame_rate: f64,
    accel: f64,
    extra_meta: Map<String, Value>,
) -> Result<ScenarioSpec> {
    let mut plans: Vec<(&Trajectory, f64, String)> = vec![(ego, 0.0, EGO_CATEGORY.to_string())];
    for a in agents {
        let label = a.trajectory.category.map(|c| c.label().to_string()).ok_or_else(|| {
            Error::Parameter(format!("vehicle {} has no category", a.trajectory.vehicle_id))
        })?;
        plans.push((&a.trajectory, a.start_delay, label));
    }
    if let Some((t, _, _)) = plans.iter().find(|(t, _, _)| t.poses.is_empty() || t.speeds.len() != t.poses.len()) {
        return Err(Error::Parameter(format!("vehicle {} has no poses or mismatched speeds", t.vehicle_id)));
    }
    let targets: Vec<f64> = plans.iter().map(|(t, _, _)| t.speeds[0].max(0.0)).collect();
    let step = compute_stepback(&targets, accel)?;

    let mut vehicles = Vec::with_capacity(plans.len());
    for ((traj, delay, category), entry) in plans.iter().zip(&step.entries) {
        let first = traj.poses[0];
        let lead = build_leadin(first.position(), first.yaw, entry, step.t_s_max, accel, frame_rate)?;
        vehicles.push(VehicleSpec {
            id: traj.vehicle_id,
            category: category.clone(),
            start_delay: *delay,
            lead_in: lead.points,
            lead_in_speeds: lead.speeds,
            waypoints: traj.poses.iter().map(|p| p.position()).collect(),
            speeds: traj.speeds.iter().map(|v| v.max(0.0)).collect(),
        });
    }

    let mut meta = Map::new();
    meta.insert("accel".into(), Value::from(accel));
    meta.insert("t_s_max".into(), Value::from(step.t_s_max));
    meta.insert(
        "origin".into(),
        Value::from("world frame at the first ego pose: x along the initial heading, y to the left, meters"),
    );
    meta.insert(
        "timing".into(),
        Value::from("lead-ins start at t = start_delay and merge at t = start_delay + t_s_max; waypoints follow at frame_rate"),
    );
    meta.extend(extra_meta);
    let scenario = ScenarioSpec { road, vehicles, frame_rate, meta: Value::Object(meta) };
    scenario.validate()?;
    Ok(scenario)
}
