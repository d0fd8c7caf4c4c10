//! Focal length and pitch from two parallel lane boundaries of known
//! spacing, seen by a camera at known height.
//!
//! Model: principal point at the image center, square pixels, zero roll and
//! yaw, downward pitch `p`. A ground line at lateral offset `X` then images
//! to `u - cu = (X cos p / h) (v - v_vp)` with the vanishing row
//! `v_vp = cv - f tan p`. Two boundaries `W` apart therefore differ in image
//! slope by `W cos p / h` and meet at `v_vp`; the focal length is the root
//! of `W cos(atan((cv - v_vp) / f)) / h - |slope_l - slope_r|`, which is
//! monotone in `f` and found by bisection.

use super::{CameraIntrinsics, CameraMount, Point3};
use crate::{Error, Result};

/// Straight image line `u = slope * v + x_intercept` in bottom-left-origin
/// pixel coordinates (`v = height - 1 - row`).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ImageLine {
    pub slope: f64,
    pub x_intercept: f64,
}

impl ImageLine {
    pub fn u_at(&self, v: f64) -> f64 {
        self.slope * v + self.x_intercept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneCalibration {
    pub intrinsics: CameraIntrinsics,
    /// Downward pitch in radians.
    pub pitch: f64,
}

const F_MIN: f64 = 10.0;
const MAX_ITER: usize = 200;

pub fn calibrate_from_lanes(
    left: ImageLine,
    right: ImageLine,
    lane_width: f64,
    camera_height: f64,
    width: usize,
    height: usize,
) -> Result<LaneCalibration> {
    if !(lane_width > 0.0) || !(camera_height > 0.0) {
        return Err(Error::Parameter(format!(
            "lane width ({lane_width}) and camera height ({camera_height}) must be positive"
        )));
    }
    let slope_gap = (left.slope - right.slope).abs();
    if slope_gap < 1e-12 {
        return Err(Error::CalibrationInfeasible("lane lines are parallel in the image".into()));
    }
    let cu = width as f64 / 2.0;
    let cv = height as f64 / 2.0;
    // intersection in bottom-left coordinates, then back to image rows
    let v_meet = (right.x_intercept - left.x_intercept) / (left.slope - right.slope);
    let vp_row = height as f64 - 1.0 - v_meet;
    let horizon_offset = cv - vp_row;

    let residual = |f: f64| lane_width * (horizon_offset / f).atan().cos() / camera_height - slope_gap;
    let (mut lo, mut hi) = (F_MIN, 10.0 * width as f64);
    let (r_lo, r_hi) = (residual(lo), residual(hi));
    if !(r_lo < 0.0 && r_hi > 0.0) {
        return Err(Error::CalibrationInfeasible(format!(
            "no focal length in [{lo}, {hi}] matches lane width {lane_width} m \
             (vanishing row {vp_row:.3}, slope gap {slope_gap:.6})"
        )));
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-13 * lo {
            break;
        }
    }
    let focal = 0.5 * (lo + hi);
    Ok(LaneCalibration {
        intrinsics: CameraIntrinsics::new(focal, focal, cu, cv, width, height)?,
        pitch: (horizon_offset / focal).atan(),
    })
}

/// Image of the ground line at lateral offset `lateral` (meters, camera
/// right positive), found by projecting two points on it.
pub fn render_ground_line(intrinsics: &CameraIntrinsics, mount: &CameraMount, lateral: f64) -> Option<ImageLine> {
    let project = |z: f64| {
        let p = mount.tilt(Point3::new(lateral, mount.height, z));
        intrinsics.project(p).map(|(u, v)| (u, intrinsics.height as f64 - 1.0 - v))
    };
    let (u0, v0) = project(8.0)?;
    let (u1, v1) = project(40.0)?;
    if (v1 - v0).abs() < 1e-12 {
        return None;
    }
    let slope = (u1 - u0) / (v1 - v0);
    Some(ImageLine { slope, x_intercept: u0 - slope * v0 })
}
