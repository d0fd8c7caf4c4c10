use std::collections::BTreeMap;

use super::{iou, solve_assignment, BBox2D, Detection};

/// Result of associating one frame's detections with the live tracks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameAssociation {
    /// (track index, detection index)
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Optimal 1 - IOU assignment; pairs below `iou_threshold` are split back
/// into unmatched tracks and detections.
pub fn associate_frame(tracks: &[BBox2D], detections: &[BBox2D], iou_threshold: f64) -> FrameAssociation {
    let cost: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| detections.iter().map(|d| 1.0 - iou(t, d)).collect())
        .collect();
    let assignment = solve_assignment(&cost);
    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    let mut matches = Vec::new();
    for (t, d) in assignment.pairs {
        if iou(&tracks[t], &detections[d]) >= iou_threshold {
            track_used[t] = true;
            det_used[d] = true;
            matches.push((t, d));
        }
    }
    FrameAssociation {
        matches,
        unmatched_tracks: (0..tracks.len()).filter(|&t| !track_used[t]).collect(),
        unmatched_detections: (0..detections.len()).filter(|&d| !det_used[d]).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Tentative,
    Active,
    Lost,
    Dead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u32,
    pub state: TrackState,
    /// Consecutive matched frames.
    pub hits: u32,
    /// Consecutive unmatched frames.
    pub misses: u32,
    pub history: BTreeMap<u32, Detection>,
    /// Whether the track ever reached the active state.
    pub confirmed: bool,
}

impl Track {
    pub fn last_box(&self) -> BBox2D {
        self.history.values().next_back().expect("tracks are born with one detection").bbox
    }

    pub fn is_alive(&self) -> bool {
        self.state != TrackState::Dead
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerParams {
    pub birth_hits: u32,
    pub death_misses: u32,
    pub iou_threshold: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams { birth_hits: 3, death_misses: 5, iou_threshold: 0.3 }
    }
}

/// All tracks of one scene. Ids are allocated monotonically and never reused.
#[derive(Debug, Clone)]
pub struct TrackSet {
    params: TrackerParams,
    tracks: Vec<Track>,
    next_id: u32,
}

impl TrackSet {
    pub fn new(params: TrackerParams) -> Self {
        assert!(params.birth_hits >= 1 && params.death_misses >= 1, "thresholds must be at least 1");
        TrackSet { params, tracks: Vec::new(), next_id: 1 }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn into_tracks(self) -> Vec<Track> {
        self.tracks
    }

    /// Indices (into `tracks()`) of the tracks taking part in association.
    pub fn live_indices(&self) -> Vec<usize> {
        (0..self.tracks.len()).filter(|&i| self.tracks[i].is_alive()).collect()
    }

    /// Associates `detections` (all from `frame`) and applies the lifecycle.
    pub fn update(&mut self, frame: u32, detections: &[Detection]) -> FrameAssociation {
        let live = self.live_indices();
        let boxes: Vec<BBox2D> = live.iter().map(|&i| self.tracks[i].last_box()).collect();
        let det_boxes: Vec<BBox2D> = detections.iter().map(|d| d.bbox).collect();
        let assoc = associate_frame(&boxes, &det_boxes, self.params.iou_threshold);
        let global = FrameAssociation {
            matches: assoc.matches.iter().map(|&(t, d)| (live[t], d)).collect(),
            unmatched_tracks: assoc.unmatched_tracks.iter().map(|&t| live[t]).collect(),
            unmatched_detections: assoc.unmatched_detections.clone(),
        };
        self.step_lifecycle(frame, detections, &global);
        global
    }

    /// Applies hit/miss counting for one frame. Track indices in `result`
    /// refer to `tracks()`.
    pub fn step_lifecycle(&mut self, frame: u32, detections: &[Detection], result: &FrameAssociation) {
        let TrackerParams { birth_hits, death_misses, .. } = self.params;
        for &(t, d) in &result.matches {
            let track = &mut self.tracks[t];
            debug_assert!(track.is_alive());
            track.hits += 1;
            track.misses = 0;
            track.history.insert(frame, detections[d].clone());
            match track.state {
                TrackState::Tentative if track.hits >= birth_hits => {
                    track.state = TrackState::Active;
                    track.confirmed = true;
                }
                TrackState::Lost => track.state = TrackState::Active,
                _ => {}
            }
        }
        for &t in &result.unmatched_tracks {
            let track = &mut self.tracks[t];
            track.misses += 1;
            track.hits = 0;
            track.state = match track.state {
                TrackState::Tentative => TrackState::Dead,
                _ if track.misses >= death_misses => TrackState::Dead,
                _ => TrackState::Lost,
            };
        }
        for &d in &result.unmatched_detections {
            let state = if birth_hits <= 1 { TrackState::Active } else { TrackState::Tentative };
            let mut history = BTreeMap::new();
            history.insert(frame, detections[d].clone());
            self.tracks.push(Track {
                id: self.next_id,
                state,
                hits: 1,
                misses: 0,
                history,
                confirmed: state == TrackState::Active,
            });
            self.next_id += 1;
        }
    }
}
