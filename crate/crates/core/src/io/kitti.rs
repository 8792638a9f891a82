use std::path::Path;

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};

const RECORD: usize = 16;

/// A parsed velodyne scan and the number of non-finite records dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiScan {
    pub cloud: PointCloud,
    pub dropped_non_finite: usize,
}

/// Little-endian `f32` quadruples `(x, y, z, intensity)`.
pub fn parse_kitti_bin(bytes: &[u8], path: &Path) -> Result<KittiScan> {
    if bytes.len() % RECORD != 0 {
        let offset = bytes.len() - bytes.len() % RECORD;
        return Err(Error::format(
            path,
            format!("byte {offset}"),
            format!(
                "truncated record: {} trailing bytes, file length {} is not a multiple of {RECORD}",
                bytes.len() % RECORD,
                bytes.len()
            ),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / RECORD);
    let mut dropped = 0;
    for rec in bytes.chunks_exact(RECORD) {
        let f = |i: usize| f32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().unwrap()) as f64;
        let p = Point::new(f(0), f(1), f(2), f(3));
        if p.is_finite() {
            points.push(p);
        } else {
            dropped += 1;
        }
    }
    Ok(KittiScan {
        cloud: PointCloud::new(points),
        dropped_non_finite: dropped,
    })
}

pub fn read_kitti_bin(path: &Path) -> Result<KittiScan> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let scan = parse_kitti_bin(&bytes, path)?;
    if scan.dropped_non_finite > 0 {
        log::warn!(
            "{}: dropped {} non-finite points",
            path.display(),
            scan.dropped_non_finite
        );
    }
    Ok(scan)
}

/// Writes the cloud as `f32`, so coordinates round to single precision.
pub fn write_kitti_bin(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut bytes = Vec::with_capacity(cloud.len() * RECORD);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
