//! Identity maintenance across frames: IOU costs, optimal assignment and
//! hit/miss gated track birth and death over file-provided detections.

mod assignment;
mod tracker;

pub use assignment::{solve_assignment, Assignment};
pub use tracker::{associate_frame, FrameAssociation, Track, TrackSet, TrackState, TrackerParams};

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned image box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2D {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BBox2D {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Result<Self> {
        let b = BBox2D { u_min, v_min, u_max, v_max };
        if !(u_min < u_max && v_min < v_max) || ![u_min, v_min, u_max, v_max].iter().all(|x| x.is_finite()) {
            return Err(Error::Parameter(format!("invalid box {b:?}")));
        }
        Ok(b)
    }

    pub fn area(&self) -> f64 {
        (self.u_max - self.u_min) * (self.v_max - self.v_min)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.u_min + self.u_max), 0.5 * (self.v_min + self.v_max))
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BBox2D, b: &BBox2D) -> f64 {
    let w = (a.u_max.min(b.u_max) - a.u_min.max(b.u_min)).max(0.0);
    let h = (a.v_max.min(b.v_max) - a.v_min.max(b.v_min)).max(0.0);
    let inter = w * h;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: u32,
    pub bbox: BBox2D,
    pub score: f64,
    pub mask_file: Option<String>,
    pub class: String,
}

#[derive(Serialize, Deserialize)]
struct DetectionRecord {
    frame: u32,
    bbox: [f64; 4],
    score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask_file: Option<String>,
    #[serde(default = "default_class")]
    class: String,
}

fn default_class() -> String {
    "car".into()
}

impl Detection {
    fn from_record(r: DetectionRecord) -> std::result::Result<Self, String> {
        let [u0, v0, u1, v1] = r.bbox;
        let bbox = BBox2D::new(u0, v0, u1, v1).map_err(|e| e.to_string())?;
        if !(0.0..=1.0).contains(&r.score) {
            return Err(format!("score {} outside [0, 1]", r.score));
        }
        Ok(Detection { frame: r.frame, bbox, score: r.score, mask_file: r.mask_file, class: r.class })
    }

    /// One JSON Lines record, without trailing newline.
    pub fn to_json_line(&self) -> String {
        let b = &self.bbox;
        let record = DetectionRecord {
            frame: self.frame,
            bbox: [b.u_min, b.v_min, b.u_max, b.v_max],
            score: self.score,
            mask_file: self.mask_file.clone(),
            class: self.class.clone(),
        };
        serde_json::to_string(&record).expect("detection record serializes")
    }
}

/// Reads detections from JSON Lines, grouped by frame. Blank lines are
/// skipped; frames absent from the file simply have no detections.
pub fn read_detections(path: &Path) -> Result<BTreeMap<u32, Vec<Detection>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut by_frame: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DetectionRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        let det = Detection::from_record(record).map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        by_frame.entry(det.frame).or_default().push(det);
    }
    Ok(by_frame)
}
