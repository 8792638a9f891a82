//! File formats: KITTI velodyne `.bin`, an ASCII PCD subset, KITTI pose
//! text, JSON box lists and reports, CSV metrics.

mod kitti;
mod pcd;
mod poses;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use kitti::{parse_kitti_bin, read_kitti_bin, write_kitti_bin, KittiScan};
pub use pcd::{read_pcd, write_labeled_cloud, write_pcd_labeled, LabeledPoint, PcdCloud, WriteSummary};
pub use poses::{read_poses, write_poses};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::eval::{LabeledBox, RpeEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanFormat {
    KittiBin,
    PcdAscii,
}

impl ScanFormat {
    /// Guesses the format from the extension: `.pcd` or KITTI binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("pcd") => ScanFormat::PcdAscii,
            _ => ScanFormat::KittiBin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanFile {
    pub path: PathBuf,
    pub format: ScanFormat,
    pub frame_index: usize,
}

/// Scan files of a directory (`.bin` and `.pcd`), sorted by name.
pub fn list_scans(dir: &Path) -> Result<Vec<ScanFile>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                    Some("bin" | "pcd")
                )
        })
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .enumerate()
        .map(|(frame_index, path)| ScanFile {
            format: ScanFormat::from_path(&path),
            path,
            frame_index,
        })
        .collect())
}

/// Reads a scan in either supported format. Non-finite points are dropped.
pub fn read_scan(path: &Path) -> Result<PointCloud> {
    match ScanFormat::from_path(path) {
        ScanFormat::KittiBin => read_kitti_bin(path).map(|s| s.cloud),
        ScanFormat::PcdAscii => {
            let mut cloud = read_pcd(path)?.cloud;
            let dropped = cloud.retain_finite();
            if dropped > 0 {
                log::warn!("{}: dropped {dropped} non-finite points", path.display());
            }
            Ok(cloud)
        }
    }
}

pub fn read_boxes(path: &Path) -> Result<Vec<LabeledBox>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let boxes: Vec<LabeledBox> = serde_json::from_str(&text).map_err(|e| {
        Error::format(path, format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    for (i, b) in boxes.iter().enumerate() {
        LabeledBox::new(b.center, b.dimensions, b.yaw, &b.class_tag)
            .map_err(|e| Error::format(path, format!("box {i}"), e.to_string()))?;
    }
    Ok(boxes)
}

pub fn write_boxes(path: &Path, boxes: &[LabeledBox]) -> Result<()> {
    write_json(path, &boxes)
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Per-frame RPE as `frame,translation_m,rotation_deg`.
pub fn write_rpe_csv(path: &Path, entries: &[RpeEntry]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "frame,translation_m,rotation_deg")?;
        for e in entries {
            writeln!(w, "{},{},{}", e.frame, e.translation, e.rotation_deg)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{rpe, straight_line};

    #[test]
    fn boxes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("boxes.json");
        let boxes = vec![
            LabeledBox::new([1.0, 2.0, 0.5], [1.0, 1.0, 1.0], 0.3, "box").unwrap(),
            LabeledBox::new([-4.0, 0.0, 0.0], [2.0, 0.5, 3.0], 0.0, "").unwrap(),
        ];
        write_boxes(&p, &boxes).unwrap();
        assert_eq!(read_boxes(&p).unwrap(), boxes);
    }

    #[test]
    fn bad_boxes_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("boxes.json");
        std::fs::write(&p, "[{\"center\": [0,0,0], \"dimensions\": [1,0,1], \"yaw\": 0}]").unwrap();
        let err = read_boxes(&p).unwrap_err().to_string();
        assert!(err.contains("box 0"), "{err}");
        std::fs::write(&p, "[{\"center\": [0,0,0],\n oops}]").unwrap();
        let err = read_boxes(&p).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn rpe_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rpe.csv");
        let gt = straight_line(3, 1.0);
        write_rpe_csv(&p, &rpe(&gt, &gt, 1).unwrap()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "frame,translation_m,rotation_deg\n0,0,0\n1,0,0\n");
    }

    #[test]
    fn scan_listing() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["000002.bin", "000001.bin", "notes.txt", "000003.pcd"] {
            std::fs::write(dir.path().join(name), b"").unwrap();
        }
        let scans = list_scans(dir.path()).unwrap();
        let names: Vec<_> = scans
            .iter()
            .map(|s| s.path.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(names, ["000001.bin", "000002.bin", "000003.pcd"]);
        assert_eq!(scans[2].format, ScanFormat::PcdAscii);
        assert_eq!(scans[2].frame_index, 2);
    }
}
