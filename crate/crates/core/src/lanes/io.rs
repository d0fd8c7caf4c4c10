//! Lane mask ingestion: one binary PNG per frame or a JSON Lines file of
//! pixel lists. Both are top-left-origin on disk.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use crate::{Error, Result};

#[derive(serde::Deserialize, serde::Serialize)]
struct LaneRecord {
    frame: u32,
    pixels: Vec<[f64; 2]>,
}

fn to_bottom_left(pixels: impl IntoIterator<Item = [f64; 2]>, height: usize) -> Vec<[f64; 2]> {
    pixels.into_iter().map(|[u, v]| [u, height as f64 - 1.0 - v]).collect()
}

/// Reads `{"frame": n, "pixels": [[u, v], ...]}` lines. Several records for
/// one frame are concatenated.
pub fn read_lane_jsonl(path: &Path, image_height: usize) -> Result<BTreeMap<u32, Vec<[f64; 2]>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: BTreeMap<u32, Vec<[f64; 2]>> = BTreeMap::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LaneRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        out.entry(rec.frame).or_default().extend(to_bottom_left(rec.pixels, image_height));
    }
    Ok(out)
}

pub fn lane_jsonl_line(frame: u32, top_left_pixels: &[[f64; 2]]) -> String {
    serde_json::to_string(&LaneRecord { frame, pixels: top_left_pixels.to_vec() }).expect("lane record serializes")
}

/// Nonzero pixels of a lane mask PNG, bottom-left origin.
pub fn read_lane_png(path: &Path) -> Result<Vec<[f64; 2]>> {
    let img = image::open(path).map_err(|e| Error::parse(path, e))?.into_luma16();
    let height = img.height() as usize;
    let pixels = img
        .enumerate_pixels()
        .filter(|(_, _, p)| p.0[0] != 0)
        .map(|(u, v, _)| [u as f64, v as f64]);
    Ok(to_bottom_left(pixels, height))
}

/// Loads lanes from `lanes/` (PNG per frame, `%06d.png`) or a `.jsonl`
/// file, chosen by the path's extension.
pub fn read_lanes(path: &Path, image_height: usize) -> Result<BTreeMap<u32, Vec<[f64; 2]>>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return read_lane_jsonl(path, image_height);
    }
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<_> = entries.filter_map(|e| e.ok()).map(|e| e.path()).collect();
    files.sort();
    for file in files {
        if file.extension().is_none_or(|e| e != "png") {
            continue;
        }
        let Some(frame) = file.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u32>().ok()) else {
            continue;
        };
        out.insert(frame, read_lane_png(&file)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_jsonl_agree() {
        let dir = tempfile::tempdir().unwrap();
        let lanes = dir.path().join("lanes");
        std::fs::create_dir(&lanes).unwrap();
        let mut img = image::GrayImage::new(8, 4);
        img.put_pixel(2, 3, image::Luma([255]));
        img.put_pixel(5, 0, image::Luma([1]));
        img.save(lanes.join("000007.png")).unwrap();
        let from_png = read_lanes(&lanes, 4).unwrap();
        assert_eq!(from_png[&7], vec![[5.0, 3.0], [2.0, 0.0]]);

        let jsonl = dir.path().join("lanes.jsonl");
        std::fs::write(&jsonl, format!("{}\n", lane_jsonl_line(7, &[[5.0, 0.0], [2.0, 3.0]]))).unwrap();
        assert_eq!(read_lanes(&jsonl, 4).unwrap(), from_png);
    }
}
