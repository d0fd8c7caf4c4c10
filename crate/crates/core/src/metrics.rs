//! CLEAR-MOT evaluation of absolute (world-frame) trajectories.
//!
//! Ground truth given relative to the ego is first composed with the ego
//! odometry, so both sides are compared in the same world frame. Objects are
//! matched per frame by optimal assignment on planar distance, gated at a
//! threshold in meters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::tracking::solve_assignment;
use crate::trajectory::OdometryPose;
use crate::{Error, Result};

/// Default gate on matched distance, m.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 3.0;
/// Fraction of its lifespan a trajectory must be tracked to count as
/// mostly tracked.
pub const MOSTLY_TRACKED: f64 = 0.8;
/// At most this fraction tracked counts as mostly lost.
pub const MOSTLY_LOST: f64 = 0.2;

/// One object observation: `frame,object_id,x,y`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrackPoint {
    pub frame: u32,
    pub object_id: u32,
    pub x: f64,
    pub y: f64,
}

/// Percentages are in [0, 100]; counts are plain integers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[allow(non_snake_case)]
pub struct MetricsReport {
    pub MOTA: f64,
    pub MOTP: f64,
    pub MODA: f64,
    pub MODP: f64,
    pub recall: f64,
    pub precision: f64,
    pub F1: f64,
    pub FAR: f64,
    pub TP: u64,
    pub FP: u64,
    pub FN: u64,
    pub IDSW: u64,
    pub objects: u64,
    pub trajectories: u64,
    pub MT: f64,
    pub PT: f64,
    pub ML: f64,
}

pub fn read_tracks_csv(path: &Path) -> Result<Vec<TrackPoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tracks_csv(&text).map_err(|m| Error::parse(path, m))
}

pub fn parse_tracks_csv(text: &str) -> std::result::Result<Vec<TrackPoint>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty track file")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["frame", "object_id", "x", "y"] {
        return Err(format!("expected header frame,object_id,x,y, found {header:?}"));
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(format!("line {}: expected 4 fields", i + 1));
            }
            let int = |s: &str| s.parse::<u32>().map_err(|e| format!("line {}: {s:?}: {e}", i + 1));
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {s:?}: {e}", i + 1));
            Ok(TrackPoint { frame: int(f[0])?, object_id: int(f[1])?, x: num(f[2])?, y: num(f[3])? })
        })
        .collect()
}

pub fn format_tracks_csv(points: &[TrackPoint]) -> String {
    let mut out = String::from("frame,object_id,x,y\n");
    for p in points {
        let _ = writeln!(out, "{},{},{:.6},{:.6}", p.frame, p.object_id, p.x, p.y);
    }
    out
}

/// Transforms ego-relative positions (x forward, y left) into the world
/// frame using each frame's odometry pose.
pub fn absolutize_ground_truth(relative: &[TrackPoint], odometry: &[OdometryPose]) -> Result<Vec<TrackPoint>> {
    let poses: BTreeMap<u32, &OdometryPose> = odometry.iter().map(|p| (p.frame, p)).collect();
    let missing: BTreeSet<u32> = relative.iter().map(|p| p.frame).filter(|f| !poses.contains_key(f)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingFrames(missing.into_iter().collect()));
    }
    Ok(relative
        .iter()
        .map(|p| {
            let e = poses[&p.frame];
            let (s, c) = e.yaw.sin_cos();
            TrackPoint { x: e.x + c * p.x - s * p.y, y: e.y + s * p.x + c * p.y, ..*p }
        })
        .collect())
}

fn by_frame(points: &[TrackPoint]) -> BTreeMap<u32, Vec<&TrackPoint>> {
    let mut map: BTreeMap<u32, Vec<&TrackPoint>> = BTreeMap::new();
    for p in points {
        map.entry(p.frame).or_default().push(p);
    }
    for v in map.values_mut() {
        v.sort_by_key(|p| p.object_id);
    }
    map
}

fn pct(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        100.0 * num / den
    } else {
        0.0
    }
}

pub fn evaluate(gt: &[TrackPoint], est: &[TrackPoint], match_threshold: f64) -> Result<MetricsReport> {
    if !(match_threshold > 0.0) {
        return Err(Error::Parameter(format!("match threshold {match_threshold} must be positive")));
    }
    if gt.is_empty() {
        return Err(Error::UndefinedMetrics("ground truth is empty".into()));
    }
    let gt_frames = by_frame(gt);
    let est_frames = by_frame(est);
    let frames: BTreeSet<u32> = gt_frames.keys().chain(est_frames.keys()).copied().collect();
    let span = (frames.last().unwrap() - frames.first().unwrap() + 1) as f64;

    let (mut tp, mut fp, mut fn_, mut idsw) = (0u64, 0u64, 0u64, 0u64);
    let mut overlap_sum = 0.0;
    let mut frame_overlaps = Vec::new();
    let mut last_match: BTreeMap<u32, u32> = BTreeMap::new();
    let mut tracked: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    let empty = Vec::new();

    for f in &frames {
        let g = gt_frames.get(f).unwrap_or(&empty);
        let e = est_frames.get(f).unwrap_or(&empty);
        let big = match_threshold * 1e3 + 1.0;
        let cost: Vec<Vec<f64>> = g
            .iter()
            .map(|a| {
                e.iter()
                    .map(|b| {
                        let d = (a.x - b.x).hypot(a.y - b.y);
                        if d <= match_threshold { d } else { big }
                    })
                    .collect()
            })
            .collect();
        let pairs: Vec<(usize, usize)> = if g.is_empty() || e.is_empty() {
            Vec::new()
        } else {
            solve_assignment(&cost).pairs.into_iter().filter(|&(i, j)| cost[i][j] <= match_threshold).collect()
        };
        let mut frame_sum = 0.0;
        let mut matched_gt = BTreeSet::new();
        for &(i, j) in &pairs {
            let (a, b) = (g[i], e[j]);
            let overlap = 1.0 - cost[i][j] / match_threshold;
            overlap_sum += overlap;
            frame_sum += overlap;
            matched_gt.insert(a.object_id);
            if let Some(prev) = last_match.insert(a.object_id, b.object_id) {
                if prev != b.object_id {
                    idsw += 1;
                }
            }
        }
        if !pairs.is_empty() {
            frame_overlaps.push(frame_sum / pairs.len() as f64);
        }
        for a in g {
            let entry = tracked.entry(a.object_id).or_default();
            entry.1 += 1;
            if matched_gt.contains(&a.object_id) {
                entry.0 += 1;
            }
        }
        tp += pairs.len() as u64;
        fn_ += (g.len() - pairs.len()) as u64;
        fp += (e.len() - pairs.len()) as u64;
    }

    let total = gt.len() as f64;
    let recall = pct(tp as f64, (tp + fn_) as f64);
    let precision = pct(tp as f64, (tp + fp) as f64);
    let f1 = if recall + precision > 0.0 { 2.0 * recall * precision / (recall + precision) } else { 0.0 };
    let n_traj = tracked.len() as f64;
    let (mut mt, mut ml) = (0.0, 0.0);
    for &(hit, life) in tracked.values() {
        let ratio = hit as f64 / life as f64;
        if ratio >= MOSTLY_TRACKED {
            mt += 1.0;
        } else if ratio <= MOSTLY_LOST {
            ml += 1.0;
        }
    }
    let (mt, ml) = (pct(mt, n_traj), pct(ml, n_traj));
    Ok(MetricsReport {
        MOTA: 100.0 * (1.0 - (fn_ + fp + idsw) as f64 / total),
        MOTP: pct(overlap_sum, tp as f64),
        MODA: 100.0 * (1.0 - (fn_ + fp) as f64 / total),
        MODP: pct(frame_overlaps.iter().sum(), frame_overlaps.len() as f64),
        recall,
        precision,
        F1: f1,
        FAR: pct(fp as f64, span),
        TP: tp,
        FP: fp,
        FN: fn_,
        IDSW: idsw,
        objects: gt.len() as u64,
        trajectories: tracked.len() as u64,
        MT: mt,
        PT: 100.0 - mt - ml,
        ML: ml,
    })
}

impl MetricsReport {
    /// Plain-text report in three blocks, one row named `sequence`.
    pub fn to_table(&self, sequence: &str) -> String {
        let p = |v: f64| format!("{v:.2} %");
        let rows: [(Vec<&str>, Vec<String>); 3] = [
            (
                vec!["MOTA", "MOTP", "MODA", "MODP", "recall"],
                vec![p(self.MOTA), p(self.MOTP), p(self.MODA), p(self.MODP), p(self.recall)],
            ),
            (
                vec!["precision", "F1", "TP", "FP", "FN", "FAR"],
                vec![p(self.precision), p(self.F1), self.TP.to_string(), self.FP.to_string(), self.FN.to_string(), p(self.FAR)],
            ),
            (
                vec!["objects", "trajectories", "MT", "PT", "ML", "IDSW"],
                vec![
                    self.objects.to_string(),
                    self.trajectories.to_string(),
                    p(self.MT),
                    p(self.PT),
                    p(self.ML),
                    self.IDSW.to_string(),
                ],
            ),
        ];
        let mut out = String::new();
        for (i, (heads, vals)) in rows.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let mut widths = vec!["Sequence".len().max(sequence.len())];
            widths.extend(heads.iter().zip(vals).map(|(h, v)| h.len().max(v.len())));
            let line = |first: &str, cells: Vec<&str>| -> String {
                let mut s = format!("{first:<w$}", w = widths[0]);
                for (c, w) in cells.iter().zip(&widths[1..]) {
                    let _ = write!(s, " | {c:>w$}");
                }
                s.push('\n');
                s
            };
            out.push_str(&line("Sequence", heads.clone()));
            let rule: usize = widths.iter().sum::<usize>() + 3 * (widths.len() - 1);
            out.push_str(&"-".repeat(rule));
            out.push('\n');
            out.push_str(&line(sequence, vals.iter().map(String::as_str).collect()));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
