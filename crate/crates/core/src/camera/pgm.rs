//! 16-bit binary PGM ("P5") depth maps.

use std::path::Path;

use super::DepthMap;
use crate::{Error, Result};

/// Meters per depth sample in KITTI-style 16-bit depth PNG/PGM files.
pub const KITTI_DEPTH_SCALE: f64 = 1.0 / 256.0;

pub fn read_depth_pgm(path: &Path, meters_per_unit: f64) -> Result<DepthMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_depth_pgm(&bytes, meters_per_unit).map_err(|msg| Error::parse(path, msg))
}

pub fn decode_depth_pgm(bytes: &[u8], meters_per_unit: f64) -> std::result::Result<DepthMap, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?.to_owned());
    }
    if fields[0] != "P5" {
        return Err(format!("unsupported magic {:?}, expected P5", fields[0]));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| format!("bad header field {s:?}: {e}"));
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(format!("invalid maxval {maxval}"));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * sample_bytes;
    let raster = bytes.get(pos..pos + expected).ok_or_else(|| {
        format!("raster has {} bytes, expected {expected}", bytes.len().saturating_sub(pos))
    })?;
    let depth = if sample_bytes == 1 {
        raster.iter().map(|&b| b as f64 * meters_per_unit).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * meters_per_unit)
            .collect()
    };
    DepthMap::new(width, height, depth).map_err(|e| e.to_string())
}

/// Encodes depths as 16-bit samples (`round(depth / meters_per_unit)`),
/// with invalid or out-of-range depths stored as 0.
pub fn encode_depth_pgm(depth: &DepthMap, meters_per_unit: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", depth.width(), depth.height()).into_bytes();
    out.reserve(depth.values().len() * 2);
    for &d in depth.values() {
        let units = (d / meters_per_unit).round();
        let sample = if d > 0.0 && units >= 1.0 && units <= 65535.0 { units as u16 } else { 0 };
        out.extend_from_slice(&sample.to_be_bytes());
    }
    out
}

pub fn write_depth_pgm(path: &Path, depth: &DepthMap, meters_per_unit: f64) -> Result<()> {
    std::fs::write(path, encode_depth_pgm(depth, meters_per_unit)).map_err(|e| Error::io(path, e))
}
