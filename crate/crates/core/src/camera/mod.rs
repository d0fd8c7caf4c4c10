//! Pinhole camera math: depth back-projection, masked point clouds,
//! vehicle position estimates and lane-based focal length calibration.

mod calibration;
pub mod pgm;

pub use calibration::{calibrate_from_lanes, render_ground_line, ImageLine, LaneCalibration};

use std::ops::{Add, Div, Mul, Sub};

use crate::{Error, Result};

/// Focal lengths and principal point in pixels, plus the image size they
/// belong to.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub fu: f64,
    pub fv: f64,
    pub cu: f64,
    pub cv: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fu: f64, fv: f64, cu: f64, cv: f64, width: usize, height: usize) -> Result<Self> {
        let intrinsics = CameraIntrinsics { fu, fv, cu, cv, width, height };
        intrinsics.validate()?;
        Ok(intrinsics)
    }

    /// Square pixels with the principal point at the image center.
    pub fn centered(focal: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(focal, focal, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fu, self.fv, self.cu, self.cv].iter().all(|v| v.is_finite());
        if !finite || self.fu <= 0.0 || self.fv <= 0.0 {
            return Err(Error::Parameter(format!(
                "focal lengths must be finite and positive (fu={}, fv={})",
                self.fu, self.fv
            )));
        }
        if !(0.0..self.width as f64).contains(&self.cu) || !(0.0..self.height as f64).contains(&self.cv) {
            return Err(Error::Parameter(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cu, self.cv, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Projects a camera-frame point. Returns `None` for points at or behind
    /// the image plane.
    pub fn project(&self, p: Point3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((p.x * self.fu / p.z + self.cu, p.y * self.fv / p.z + self.cv))
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

/// Camera-frame point in meters: x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, k: f64) -> Point3 {
        Point3::new(self.x / k, self.y / k, self.z / k)
    }
}

/// Row-major depth grid in meters. Values `<= 0` mark invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::Shape(format!(
                "depth grid has {} values, expected {}x{}",
                depth.len(),
                width,
                height
            )));
        }
        if depth.iter().any(|d| !d.is_finite()) {
            return Err(Error::Parameter("depth map contains non-finite values".into()));
        }
        Ok(DepthMap { width, height, depth })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.depth[v * self.width + u]
    }

    pub fn values(&self) -> &[f64] {
        &self.depth
    }
}

/// Boolean membership grid, row-major; `true` marks a vehicle pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    member: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, member: Vec<bool>) -> Result<Self> {
        if member.len() != width * height {
            return Err(Error::Shape(format!(
                "mask grid has {} values, expected {}x{}",
                member.len(),
                width,
                height
            )));
        }
        Ok(PixelMask { width, height, member })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        PixelMask { width, height, member: vec![value; width * height] }
    }

    /// Mask covering the pixels whose centers fall inside an axis-aligned
    /// box given in pixel coordinates.
    pub fn from_box(width: usize, height: usize, u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Self {
        let mut mask = Self::filled(width, height, false);
        let col = |x: f64| (x.max(0.0).ceil() as usize).min(width);
        let row = |y: f64| (y.max(0.0).ceil() as usize).min(height);
        // pixel k has center k + 0.5, which lies in [lo, hi) iff k in [ceil(lo - 0.5), ceil(hi - 0.5))
        for v in row(v_min - 0.5)..row(v_max - 0.5) {
            for u in col(u_min - 0.5)..col(u_max - 0.5) {
                mask.member[v * width + u] = true;
            }
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.member[v * self.width + u]
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|m| **m).count()
    }
}

/// Back-projected points; every point has `z > 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Camera height above the road and downward pitch (radians). Used to bring
/// camera-frame points into a level frame whose y axis is vertical.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraMount {
    pub height: f64,
    pub pitch: f64,
}

impl Default for CameraMount {
    fn default() -> Self {
        CameraMount { height: 1.65, pitch: 0.0 }
    }
}

impl CameraMount {
    /// Camera frame -> level frame (x right, y down along gravity, z forward
    /// along the ground).
    pub fn level(&self, p: Point3) -> Point3 {
        let (s, c) = self.pitch.sin_cos();
        Point3::new(p.x, p.y * c + p.z * s, p.z * c - p.y * s)
    }

    /// Level frame -> camera frame.
    pub fn tilt(&self, p: Point3) -> Point3 {
        let (s, c) = self.pitch.sin_cos();
        Point3::new(p.x, p.y * c - p.z * s, p.z * c + p.y * s)
    }
}

/// Pinhole projection inverted for the 3D point of pixel `(u, v)` at
/// depth `depth` along the optical axis.
pub fn backproject_pixel(u: f64, v: f64, intrinsics: &CameraIntrinsics, depth: f64) -> Result<Point3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidDepth(depth));
    }
    if !intrinsics.contains(u, v) {
        return Err(Error::OutOfBounds { u, v, width: intrinsics.width, height: intrinsics.height });
    }
    Ok(unchecked_backproject(u, v, intrinsics, depth))
}

#[inline]
fn unchecked_backproject(u: f64, v: f64, k: &CameraIntrinsics, z: f64) -> Point3 {
    Point3::new((u - k.cu) * z / k.fu, (v - k.cv) * z / k.fv, z)
}

/// Default far limit for trusted monocular depth, meters.
pub const DEFAULT_MAX_DEPTH: f64 = 120.0;

/// One point per masked pixel with `0 < depth <= max_depth`, in row-major
/// order. Pixel `(u, v)` is back-projected at its integer coordinates.
pub fn backproject_masked(
    depth: &DepthMap,
    mask: &PixelMask,
    intrinsics: &CameraIntrinsics,
    max_depth: f64,
) -> Result<PointCloud> {
    if depth.width != mask.width || depth.height != mask.height {
        return Err(Error::Shape(format!(
            "depth map is {}x{} but mask is {}x{}",
            depth.width, depth.height, mask.width, mask.height
        )));
    }
    let points = (0..depth.height)
        .flat_map(|v| (0..depth.width).map(move |u| (u, v)))
        .filter(|&(u, v)| mask.get(u, v))
        .filter_map(|(u, v)| {
            let z = depth.get(u, v);
            (z > 0.0 && z <= max_depth).then(|| unchecked_backproject(u as f64, v as f64, intrinsics, z))
        })
        .collect();
    Ok(PointCloud { points })
}

/// Component-wise mean of the cloud.
pub fn estimate_position(cloud: &PointCloud) -> Result<Point3> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let sum = cloud.points.iter().fold(Point3::default(), |acc, p| acc + *p);
    Ok(sum / cloud.len() as f64)
}
