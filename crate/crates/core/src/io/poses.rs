use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::Trajectory;

/// One flattened row-major 3×4 `[R | t]` per line; blank lines are skipped.
pub fn read_poses(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut poses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let loc = format!("line {}", i + 1);
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, &loc, e.to_string()))?;
        let m: [f64; 12] = vals.as_slice().try_into().map_err(|_| {
            Error::format(path, &loc, format!("expected 12 values, found {}", vals.len()))
        })?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(path, &loc, "non-finite value"));
        }
        poses.push(Trajectory::pose_from_3x4(&m).map_err(|e| Error::format(path, &loc, e.to_string()))?);
    }
    Ok(Trajectory::new(poses))
}

pub fn write_poses(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        for p in &traj.poses {
            let m = Trajectory::pose_to_3x4(p);
            let row: Vec<String> = m.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
