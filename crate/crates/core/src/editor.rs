//! Backing store of the scenario editor service: the current scenario text,
//! replaced only by documents that satisfy every scenario invariant.
//!
//! Transport-agnostic; the command-line server exposes it over HTTP.

use std::path::{Path, PathBuf};

use crate::scenario::{check_overlaps, Conflict, ScenarioSpec};
use crate::{Error, Result};

/// Default minimum start separation reported by [`EditorService::check`], m.
pub const DEFAULT_MIN_GAP: f64 = 5.0;

/// Why a replacement document was refused.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Rejection {
    pub error: String,
    pub violations: Vec<String>,
}

#[derive(Debug)]
pub struct EditorService {
    path: PathBuf,
    text: String,
    min_gap: f64,
}

impl EditorService {
    /// Loads and validates the scenario file. The file text is served as is.
    pub fn open(path: &Path, min_gap: f64) -> Result<Self> {
        if !(min_gap > 0.0) {
            return Err(Error::Parameter(format!("min_gap {min_gap} must be positive")));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scenario = ScenarioSpec::from_json(&text).map_err(|m| Error::parse(path, m))?;
        scenario.validate()?;
        Ok(EditorService { path: path.to_path_buf(), text, min_gap })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Current scenario document.
    pub fn get(&self) -> &str {
        &self.text
    }

    /// Validates `body` and, when it holds, stores and returns its canonical
    /// form. The file is replaced atomically; on rejection nothing changes.
    pub fn put(&mut self, body: &str) -> std::result::Result<&str, Rejection> {
        let scenario = ScenarioSpec::from_json(body)
            .map_err(|m| Rejection { error: "malformed scenario document".into(), violations: vec![m] })?;
        let violations = scenario.violations();
        if !violations.is_empty() {
            return Err(Rejection { error: "scenario invariants violated".into(), violations });
        }
        let text = scenario.to_canonical_json();
        crate::scenario::write_atomic(&self.path, text.as_bytes())
            .map_err(|e| Rejection { error: "could not store scenario".into(), violations: vec![e.to_string()] })?;
        self.text = text;
        Ok(&self.text)
    }

    /// Start-position conflicts of `body`, or of the stored scenario when
    /// `body` is blank.
    pub fn check(&self, body: &str) -> std::result::Result<Vec<Conflict>, Rejection> {
        let text = if body.trim().is_empty() { &self.text } else { body };
        let scenario = ScenarioSpec::from_json(text)
            .map_err(|m| Rejection { error: "malformed scenario document".into(), violations: vec![m] })?;
        check_overlaps(&scenario, self.min_gap)
            .map_err(|e| Rejection { error: "overlap check failed".into(), violations: vec![e.to_string()] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::export_scenario;

    fn two_cars(gap: f64) -> ScenarioSpec {
        let mut s = crate::scenario::sample_scenario();
        s.vehicles.truncate(2);
        let first = s.vehicles[0].initial_position().unwrap();
        let v = &mut s.vehicles[1];
        v.lead_in.clear();
        v.lead_in_speeds.clear();
        v.waypoints = vec![[first[0] + gap, first[1]], [first[0] + gap + 1.0, first[1]]];
        v.speeds = vec![10.0, 10.0];
        s
    }

    fn service(s: &ScenarioSpec) -> (tempfile::TempDir, EditorService) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        export_scenario(s, &path).unwrap();
        let svc = EditorService::open(&path, DEFAULT_MIN_GAP).unwrap();
        (dir, svc)
    }

    #[test]
    fn get_serves_file_bytes_and_unedited_put_is_identity() {
        let (_dir, mut svc) = service(&two_cars(20.0));
        let on_disk = std::fs::read_to_string(svc.path()).unwrap();
        assert_eq!(svc.get(), on_disk);
        let body = svc.get().to_string();
        svc.put(&body).unwrap();
        assert_eq!(std::fs::read_to_string(svc.path()).unwrap(), on_disk);
    }

    #[test]
    fn discontinuous_put_is_rejected_and_file_kept() {
        let (_dir, mut svc) = service(&crate::scenario::sample_scenario());
        let before = svc.get().to_string();
        let mut bad = ScenarioSpec::from_json(&before).unwrap();
        let v = bad.vehicles.iter_mut().find(|v| !v.lead_in.is_empty()).unwrap();
        let last = v.lead_in.len() - 1;
        v.lead_in[last][0] -= 5.0;
        let err = svc.put(&bad.to_canonical_json()).unwrap_err();
        assert!(err.violations.iter().any(|m| m.contains("continuity")), "{err:?}");
        assert_eq!(svc.get(), before);
        assert_eq!(std::fs::read_to_string(svc.path()).unwrap(), before);
        assert!(svc.put("{not json").unwrap_err().error.contains("malformed"));
    }

    #[test]
    fn check_reports_close_starts() {
        let (_dir, svc) = service(&two_cars(3.0));
        let conflicts = svc.check("").unwrap();
        assert_eq!(conflicts.len(), 1);
        assert!((conflicts[0].distance - 3.0).abs() < 1e-9);
        assert!(svc.check(&two_cars(30.0).to_canonical_json()).unwrap().is_empty());
    }

    #[test]
    fn open_rejects_invalid_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        assert!(matches!(EditorService::open(&path, 5.0), Err(Error::Io { .. })));
        std::fs::write(&path, "{}").unwrap();
        assert!(matches!(EditorService::open(&path, 5.0), Err(Error::Parse { .. })));
    }
}
