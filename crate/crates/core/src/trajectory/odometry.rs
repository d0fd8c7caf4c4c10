//! `frame,x,y,yaw` odometry CSV (header row required).

use std::path::Path;

use super::OdometryPose;
use crate::{Error, Result};

pub fn read_odometry_csv(path: &Path) -> Result<Vec<OdometryPose>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_odometry_csv(&text).map_err(|m| Error::parse(path, m))
}

pub fn parse_odometry_csv(text: &str) -> std::result::Result<Vec<OdometryPose>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty odometry file")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["frame", "x", "y", "yaw"] {
        return Err(format!("expected header frame,x,y,yaw, found {header:?}"));
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(format!("line {}: expected 4 fields", i + 1));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {s:?}: {e}", i + 1));
            Ok(OdometryPose {
                frame: f[0].parse().map_err(|e| format!("line {}: frame {:?}: {e}", i + 1, f[0]))?,
                x: num(f[1])?,
                y: num(f[2])?,
                yaw: num(f[3])?,
            })
        })
        .collect()
}

pub fn format_odometry_csv(poses: &[OdometryPose]) -> String {
    let mut out = String::from("frame,x,y,yaw\n");
    for p in poses {
        out.push_str(&format!("{},{:.6},{:.6},{:.6}\n", p.frame, p.x, p.y, p.yaw));
    }
    out
}
