//! The exported scenario document, its invariants and canonical JSON form.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use super::road::{dist, RoadSpec};
use super::taxonomy::AgentCategory;
use crate::{Error, Result};

/// Category string used for the camera vehicle.
pub const EGO_CATEGORY: &str = "EGO";

/// Largest allowed jump between a vehicle's lead-in and its main waypoints.
pub const CONTINUITY_GAP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub id: u32,
    pub category: String,
    pub start_delay: f64,
    pub lead_in: Vec<[f64; 2]>,
    pub lead_in_speeds: Vec<f64>,
    pub waypoints: Vec<[f64; 2]>,
    pub speeds: Vec<f64>,
}

impl VehicleSpec {
    /// Position at simulation start.
    pub fn initial_position(&self) -> Option<[f64; 2]> {
        self.lead_in.first().or(self.waypoints.first()).copied()
    }

    fn violations(&self, out: &mut Vec<String>) {
        let id = self.id;
        if self.category != EGO_CATEGORY && self.category.parse::<AgentCategory>().is_err() {
            out.push(format!("vehicle {id}: unknown category {:?}", self.category));
        }
        if !(self.start_delay >= 0.0 && self.start_delay.is_finite()) {
            out.push(format!("vehicle {id}: start_delay {} must be >= 0", self.start_delay));
        }
        if self.waypoints.is_empty() {
            out.push(format!("vehicle {id}: no waypoints"));
        }
        if self.speeds.len() != self.waypoints.len() {
            out.push(format!(
                "vehicle {id}: {} speeds for {} waypoints",
                self.speeds.len(),
                self.waypoints.len()
            ));
        }
        if self.lead_in_speeds.len() != self.lead_in.len() {
            out.push(format!(
                "vehicle {id}: {} lead-in speeds for {} lead-in points",
                self.lead_in_speeds.len(),
                self.lead_in.len()
            ));
        }
        let coords = self.lead_in.iter().chain(&self.waypoints).flatten();
        if coords.into_iter().any(|v| !v.is_finite()) {
            out.push(format!("vehicle {id}: non-finite coordinates"));
        }
        if self.speeds.iter().chain(&self.lead_in_speeds).any(|v| !(*v >= 0.0 && v.is_finite())) {
            out.push(format!("vehicle {id}: speeds must be finite and >= 0"));
        }
        if let (Some(&a), Some(&b)) = (self.lead_in.last(), self.waypoints.first()) {
            let gap = dist(a, b);
            if !(gap < CONTINUITY_GAP) {
                out.push(format!(
                    "vehicle {id}: continuity violated, lead-in ends {gap:.3} m from the first waypoint (limit {CONTINUITY_GAP} m)"
                ));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub road: RoadSpec,
    pub vehicles: Vec<VehicleSpec>,
    pub frame_rate: f64,
    #[serde(default = "empty_meta")]
    pub meta: Value,
}

fn empty_meta() -> Value {
    Value::Object(Default::default())
}

/// Two vehicles that start closer than the allowed gap.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Conflict {
    pub a: u32,
    pub b: u32,
    pub distance: f64,
    pub position_a: [f64; 2],
    pub position_b: [f64; 2],
}

impl ScenarioSpec {
    /// Every violated invariant, empty for a valid scenario.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.road.violations();
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            out.push(format!("frame_rate {} must be positive", self.frame_rate));
        }
        if !self.meta.is_object() {
            out.push("meta must be an object".to_string());
        }
        let mut seen = BTreeSet::new();
        for v in &self.vehicles {
            if !seen.insert(v.id) {
                out.push(format!("vehicle {}: duplicate id", v.id));
            }
            v.violations(&mut out);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// Canonical text: sorted keys, two-space indentation, scalar arrays on
    /// one line and floats in fixed six-decimal notation.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        let mut out = String::new();
        write_value(&mut out, &value, 0);
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

fn write_float(out: &mut String, v: f64) {
    let s = format!("{v:.6}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        out.push_str(&s[1..]);
    } else {
        out.push_str(&s);
    }
}

fn write_scalar(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                write_float(out, n.as_f64().unwrap());
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        _ => unreachable!("not a scalar"),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|i| !i.is_array() && !i.is_object()),
        _ => false,
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if is_flat(v) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_scalar(out, item);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            // serde_json's map is ordered by key
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String(k.clone()));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        scalar => write_scalar(out, scalar),
    }
}

/// Pairs of vehicles whose initial positions are closer than `min_gap`.
pub fn check_overlaps(scenario: &ScenarioSpec, min_gap: f64) -> Result<Vec<Conflict>> {
    if !(min_gap > 0.0) {
        return Err(Error::Parameter(format!("min_gap {min_gap} must be positive")));
    }
    let starts: Vec<(u32, [f64; 2])> =
        scenario.vehicles.iter().filter_map(|v| v.initial_position().map(|p| (v.id, p))).collect();
    let mut out = Vec::new();
    for (i, &(a, pa)) in starts.iter().enumerate() {
        for &(b, pb) in &starts[i + 1..] {
            let d = dist(pa, pb);
            if d < min_gap && a != b {
                out.push(Conflict { a, b, distance: d, position_a: pa, position_b: pb });
            }
        }
    }
    Ok(out)
}

/// Validates and writes the canonical file atomically (temp file + rename).
pub fn export_scenario(scenario: &ScenarioSpec, path: &Path) -> Result<()> {
    scenario.validate()?;
    write_atomic(path, scenario.to_canonical_json().as_bytes())
}

pub fn import_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioSpec::from_json(&text).map_err(|m| Error::parse(path, m))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Parameter(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
