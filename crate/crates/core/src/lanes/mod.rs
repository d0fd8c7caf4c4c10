//! Lane pixels to persistent lane identities, bottom-edge x-intercepts and
//! the ego's lateral offset within its lane.
//!
//! All pixel coordinates here use a bottom-left origin: `v = 0` is the
//! bottom image row. Files with top-left rows are converted on ingestion.

mod dbscan;
mod grid;
pub mod io;
mod tracker;

pub use dbscan::{cluster_lane_pixels, Clustering};
pub use tracker::{associate_lanes, LaneAssociation, LaneParams, LanePipeline, TrackedLane};

use crate::camera::ImageLine;
use crate::{Error, Result};
use grid::Grid;

/// One fitted lane boundary in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneObservation {
    pub frame: u32,
    pub pixels: Vec<[f64; 2]>,
    pub line: ImageLine,
    pub lane_id: u32,
}

impl LaneObservation {
    pub fn x_intercept(&self) -> f64 {
        self.line.x_intercept
    }
}

/// Ego position across the lane bounded by the nearest boundaries on
/// either side of the reference column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralFix {
    pub frame: u32,
    /// Meters from the left boundary of the ego lane, increasing rightwards.
    pub offset_in_lane: f64,
    pub lane_width_px: f64,
    /// Persistent id of the ego lane's left boundary.
    pub ego_lane_id: u32,
}

/// Total-least-squares line through the cluster, parameterized as
/// `u = slope * v + x_intercept`.
///
/// Fails for coincident points, and for near-horizontal fits whose bottom
/// crossing lies more than ten image widths away.
pub fn fit_lane_line(cluster: &[[f64; 2]], image_width: usize) -> Result<ImageLine> {
    if cluster.len() < 2 {
        return Err(Error::Degenerate("lane cluster needs at least two points".into()));
    }
    let n = cluster.len() as f64;
    let (mu, mv) = cluster.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    let (mu, mv) = (mu / n, mv / n);
    let (mut suu, mut svv, mut suv) = (0.0, 0.0, 0.0);
    for p in cluster {
        let (du, dv) = (p[0] - mu, p[1] - mv);
        suu += du * du;
        svv += dv * dv;
        suv += du * dv;
    }
    if suu + svv <= 1e-18 * (1.0 + mu * mu + mv * mv) {
        return Err(Error::Degenerate("lane cluster points are coincident".into()));
    }
    // principal axis of the 2x2 scatter matrix
    let theta = 0.5 * (2.0 * suv).atan2(suu - svv);
    let (dir_u, dir_v) = (theta.cos(), theta.sin());
    let limit = 10.0 * image_width as f64;
    if dir_v.abs() < 1e-12 {
        return Err(Error::Degenerate("lane line is horizontal and never reaches the bottom row".into()));
    }
    let slope = dir_u / dir_v;
    let x_intercept = mu - slope * mv;
    if !x_intercept.is_finite() || x_intercept.abs() > limit {
        return Err(Error::Degenerate(format!("lane line crosses the bottom row at u={x_intercept:.1}")));
    }
    Ok(ImageLine { slope, x_intercept })
}

/// `max_{p in a} min_{q in b} |p - q|`.
pub fn directed_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter("directed Hausdorff distance needs non-empty sets".into()));
    }
    let grid = Grid::new(b, 8.0);
    Ok(a.iter().map(|p| grid.nearest_distance(p)).fold(0.0, f64::max))
}

/// Offset of `ego_ref_u` from the left intercept, as a fraction of the
/// intercept gap times `lane_width`. The returned fix carries frame 0 and
/// lane id 0; see [`locate_ego`] for the per-frame variant.
pub fn lateral_offset(ego_ref_u: f64, left_intercept: f64, right_intercept: f64, lane_width: f64) -> Result<LateralFix> {
    let gap = right_intercept - left_intercept;
    if !(gap > 0.0) {
        return Err(Error::Degenerate(format!(
            "lane intercepts {left_intercept} and {right_intercept} do not bound a lane"
        )));
    }
    Ok(LateralFix {
        frame: 0,
        offset_in_lane: (ego_ref_u - left_intercept) / gap * lane_width,
        lane_width_px: gap,
        ego_lane_id: 0,
    })
}

/// Picks the closest boundaries left and right of `ego_ref_u` among this
/// frame's observations. `None` when either side is missing.
pub fn locate_ego(frame: u32, lanes: &[LaneObservation], ego_ref_u: f64, lane_width: f64) -> Option<LateralFix> {
    let left = lanes
        .iter()
        .filter(|l| l.x_intercept() <= ego_ref_u)
        .max_by(|a, b| a.x_intercept().total_cmp(&b.x_intercept()))?;
    let right = lanes
        .iter()
        .filter(|l| l.x_intercept() > ego_ref_u)
        .min_by(|a, b| a.x_intercept().total_cmp(&b.x_intercept()))?;
    let fix = lateral_offset(ego_ref_u, left.x_intercept(), right.x_intercept(), lane_width).ok()?;
    Some(LateralFix { frame, ego_lane_id: left.lane_id, ..fix })
}
