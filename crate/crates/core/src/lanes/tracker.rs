use super::{cluster_lane_pixels, directed_hausdorff, fit_lane_line, LaneObservation};
use crate::camera::ImageLine;
use crate::tracking::solve_assignment;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaneParams {
    pub eps: f64,
    pub min_pts: usize,
    /// Association gate on the directed Hausdorff cost, pixels.
    pub max_cost: f64,
    /// Frames a lane id survives without being observed.
    pub survival_frames: u32,
    /// Fraction of image rows, counted from the bottom, used for lanes.
    pub lower_fraction: f64,
}

impl Default for LaneParams {
    fn default() -> Self {
        LaneParams { eps: 15.0, min_pts: 20, max_cost: 50.0, survival_frames: 5, lower_fraction: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedLane {
    pub id: u32,
    pub pixels: Vec<[f64; 2]>,
    pub line: ImageLine,
    pub last_seen: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaneAssociation {
    /// (current index, previous index)
    pub matched: Vec<(usize, usize)>,
    /// Ids handed out to current observations without a match.
    pub new_ids: Vec<u32>,
}

/// Matches current observations to tracked lanes using the directed
/// Hausdorff distance current -> previous as cost, and writes the resulting
/// ids into `current`. Pairs costing more than `max_cost` are rejected and
/// those observations receive fresh ids from `next_id`.
pub fn associate_lanes(
    previous: &[TrackedLane],
    current: &mut [LaneObservation],
    max_cost: f64,
    next_id: &mut u32,
) -> LaneAssociation {
    let cost: Vec<Vec<f64>> = current
        .iter()
        .map(|c| {
            previous
                .iter()
                .map(|p| directed_hausdorff(&c.pixels, &p.pixels).unwrap_or(f64::MAX / 1e3))
                .collect()
        })
        .collect();
    let assignment = if previous.is_empty() { Default::default() } else { solve_assignment(&cost) };
    let mut out = LaneAssociation::default();
    let mut assigned = vec![false; current.len()];
    for (c, p) in assignment.pairs {
        if cost[c][p] <= max_cost {
            current[c].lane_id = previous[p].id;
            assigned[c] = true;
            out.matched.push((c, p));
        }
    }
    for (c, obs) in current.iter_mut().enumerate() {
        if !assigned[c] {
            obs.lane_id = *next_id;
            out.new_ids.push(*next_id);
            *next_id += 1;
        }
    }
    out
}

/// Per-scene lane identity state.
#[derive(Debug, Clone)]
pub struct LanePipeline {
    params: LaneParams,
    image_width: usize,
    image_height: usize,
    tracked: Vec<TrackedLane>,
    next_id: u32,
}

impl LanePipeline {
    pub fn new(params: LaneParams, image_width: usize, image_height: usize) -> Self {
        LanePipeline { params, image_width, image_height, tracked: Vec::new(), next_id: 1 }
    }

    pub fn tracked(&self) -> &[TrackedLane] {
        &self.tracked
    }

    /// Fits the lanes of one frame and matches them to known lanes. `pixels` are
    /// bottom-left-origin coordinates; rows above the lower band are ignored.
    pub fn process_frame(&mut self, frame: u32, pixels: &[[f64; 2]]) -> Vec<LaneObservation> {
        let band = self.params.lower_fraction * self.image_height as f64;
        let lower: Vec<[f64; 2]> = pixels.iter().copied().filter(|p| p[1] < band).collect();
        let clustering = cluster_lane_pixels(&lower, self.params.eps, self.params.min_pts);
        let mut observations: Vec<LaneObservation> = clustering
            .clusters
            .iter()
            .filter_map(|cluster| {
                let pts: Vec<[f64; 2]> = cluster.iter().map(|&i| lower[i]).collect();
                let line = fit_lane_line(&pts, self.image_width).ok()?;
                Some(LaneObservation { frame, pixels: pts, line, lane_id: 0 })
            })
            .collect();

        self.tracked.retain(|t| frame.saturating_sub(t.last_seen) <= self.params.survival_frames);
        let assoc = associate_lanes(&self.tracked, &mut observations, self.params.max_cost, &mut self.next_id);
        for &(c, p) in &assoc.matched {
            let obs = &observations[c];
            let t = &mut self.tracked[p];
            t.pixels = obs.pixels.clone();
            t.line = obs.line;
            t.last_seen = frame;
        }
        for obs in observations.iter().filter(|o| assoc.new_ids.contains(&o.lane_id)) {
            self.tracked.push(TrackedLane { id: obs.lane_id, pixels: obs.pixels.clone(), line: obs.line, last_seen: frame });
        }
        observations.sort_by(|a, b| a.x_intercept().total_cmp(&b.x_intercept()));
        observations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lane_pixels(u0: f64, slope: f64) -> Vec<[f64; 2]> {
        (0..100).flat_map(|v| (0..3).map(move |w| [u0 + slope * v as f64 + w as f64, v as f64])).collect()
    }

    fn obs(pixels: Vec<[f64; 2]>) -> LaneObservation {
        LaneObservation { frame: 0, pixels, line: ImageLine { slope: 0.0, x_intercept: 0.0 }, lane_id: 0 }
    }

    fn tracked(id: u32, pixels: Vec<[f64; 2]>) -> TrackedLane {
        TrackedLane { id, pixels, line: ImageLine { slope: 0.0, x_intercept: 0.0 }, last_seen: 0 }
    }

    #[test]
    fn identical_sets_keep_ids() {
        let prev = vec![tracked(4, lane_pixels(100.0, 1.0)), tracked(9, lane_pixels(600.0, -1.0))];
        let mut cur = vec![obs(lane_pixels(600.0, -1.0)), obs(lane_pixels(100.0, 1.0))];
        let mut next = 10;
        let a = associate_lanes(&prev, &mut cur, 30.0, &mut next);
        assert_eq!((cur[0].lane_id, cur[1].lane_id), (9, 4));
        assert!(a.new_ids.is_empty());
    }

    #[test]
    fn small_shift_kept_far_lane_new() {
        let prev = vec![tracked(1, lane_pixels(100.0, 1.0))];
        let mut cur = vec![obs(lane_pixels(103.0, 1.0)), obs(lane_pixels(600.0, 1.0))];
        let mut next = 2;
        let a = associate_lanes(&prev, &mut cur, 30.0, &mut next);
        assert_eq!(cur[0].lane_id, 1);
        assert_eq!(cur[1].lane_id, 2);
        assert_eq!(a.new_ids, vec![2]);
        assert_eq!(next, 3);
    }

    #[test]
    fn pipeline_ids_persist_under_translation() {
        let mut pipe = LanePipeline::new(LaneParams::default(), 1242, 375);
        let frame0: Vec<[f64; 2]> = [lane_pixels(300.0, 1.2), lane_pixels(900.0, -1.2)].concat();
        let first = pipe.process_frame(0, &frame0);
        assert_eq!(first.len(), 2);
        let shifted: Vec<[f64; 2]> = frame0.iter().map(|p| [p[0] + 20.0, p[1]]).collect();
        let second = pipe.process_frame(1, &shifted);
        let ids = |v: &[LaneObservation]| v.iter().map(|o| o.lane_id).collect::<Vec<_>>();
        assert_eq!(ids(&first), ids(&second));
        assert!((second[0].x_intercept() - first[0].x_intercept() - 20.0).abs() < 1e-6);
    }

    #[test]
    fn unseen_lanes_expire() {
        let params = LaneParams { survival_frames: 2, ..Default::default() };
        let mut pipe = LanePipeline::new(params, 1242, 375);
        let first = pipe.process_frame(0, &lane_pixels(300.0, 1.0));
        let again = pipe.process_frame(5, &lane_pixels(300.0, 1.0));
        assert_ne!(first[0].lane_id, again[0].lane_id);
    }
}
