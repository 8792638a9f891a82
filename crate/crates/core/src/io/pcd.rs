use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::pipeline::FrameResult;

/// Label written for ground returns; clusters are written as `id + 1`.
pub const GROUND_LABEL: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub xyz: [f64; 3],
    pub label: u32,
}

/// What a PCD reader found. `labels` is set when the file has a `label` field.
#[derive(Debug, Clone, PartialEq)]
pub struct PcdCloud {
    pub cloud: PointCloud,
    pub labels: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WriteSummary {
    pub written: usize,
    pub ground: usize,
    pub clustered: usize,
    /// Valid non-ground returns removed by the final pass (not written).
    pub removed: usize,
}

/// ASCII PCD with fields `x y z label`. Coordinates are written in shortest
/// round-trip form, so the file is lossless.
pub fn write_pcd_labeled(path: &Path, points: &[LabeledPoint]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let n = points.len();
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# .PCD v0.7 - Point Cloud Data file format")?;
        writeln!(w, "VERSION 0.7")?;
        writeln!(w, "FIELDS x y z label")?;
        writeln!(w, "SIZE 8 8 8 4")?;
        writeln!(w, "TYPE F F F U")?;
        writeln!(w, "COUNT 1 1 1 1")?;
        writeln!(w, "WIDTH {n}")?;
        writeln!(w, "HEIGHT 1")?;
        writeln!(w, "VIEWPOINT 0 0 0 1 0 0 0")?;
        writeln!(w, "POINTS {n}")?;
        writeln!(w, "DATA ascii")?;
        for p in points {
            writeln!(w, "{} {} {} {}", p.xyz[0], p.xyz[1], p.xyz[2], p.label)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Ground returns as label 1 and final-pass clusters as `id + 1`, in
/// row-major pixel order. Removed returns are counted, not written.
pub fn write_labeled_cloud(result: &FrameResult, path: &Path) -> Result<WriteSummary> {
    let img = &result.image;
    let ground = result.ground.as_slice();
    let labels = result.final_labels.labels();
    let mut points = Vec::with_capacity(img.valid_count());
    let mut summary = WriteSummary {
        written: 0,
        ground: 0,
        clustered: 0,
        removed: 0,
    };
    for (i, (&d, &xyz)) in img.depths().iter().zip(img.points()).enumerate() {
        if d <= 0.0 {
            continue;
        }
        let label = if ground[i] {
            summary.ground += 1;
            GROUND_LABEL
        } else if labels[i] > 0 {
            summary.clustered += 1;
            labels[i] + 1
        } else {
            summary.removed += 1;
            continue;
        };
        points.push(LabeledPoint { xyz, label });
    }
    summary.written = points.len();
    write_pcd_labeled(path, &points)?;
    Ok(summary)
}

struct Header {
    fields: Vec<String>,
    points: usize,
}

fn bad(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::format(path, format!("line {line}"), msg)
}

fn parse_header<'a>(
    path: &Path,
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<Header> {
    let mut fields = None;
    let mut points = None;
    let mut width_height = (None, None);
    for (no, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let key = tok.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = tok.collect();
        let num = |s: Option<&&str>| -> Result<usize> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(path, no, format!("{key} needs a non-negative integer")))
        };
        match key.as_str() {
            "VERSION" | "SIZE" | "TYPE" | "VIEWPOINT" => {}
            "FIELDS" => fields = Some(rest.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            "COUNT" => {
                if rest.iter().any(|c| *c != "1") {
                    return Err(bad(path, no, "only COUNT 1 fields are supported"));
                }
            }
            "WIDTH" => width_height.0 = Some(num(rest.first())?),
            "HEIGHT" => width_height.1 = Some(num(rest.first())?),
            "POINTS" => points = Some(num(rest.first())?),
            "DATA" => {
                match rest.first().map(|s| s.to_ascii_lowercase()).as_deref() {
                    Some("ascii") => {}
                    Some(other) => {
                        return Err(bad(path, no, format!("DATA {other} is not supported, only ascii")))
                    }
                    None => return Err(bad(path, no, "DATA needs a format")),
                }
                let fields: Vec<String> =
                    fields.ok_or_else(|| bad(path, no, "FIELDS missing before DATA"))?;
                let points = match (points, width_height) {
                    (Some(p), _) => p,
                    (None, (Some(w), Some(h))) => w * h,
                    _ => return Err(bad(path, no, "POINTS missing before DATA")),
                };
                return Ok(Header { fields, points });
            }
            other => return Err(bad(path, no, format!("unknown header key {other:?}"))),
        }
    }
    Err(Error::format(path, "end of file", "no DATA line"))
}

/// Reads the ASCII PCD subset: `x`, `y`, `z` required, `intensity` and
/// `label` picked up when present, other fields ignored.
pub fn read_pcd(path: &Path) -> Result<PcdCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = parse_header(path, &mut lines)?;
    let col = |name: &str| header.fields.iter().position(|f| f == name);
    let (Some(xi), Some(yi), Some(zi)) = (col("x"), col("y"), col("z")) else {
        return Err(Error::format(path, "header", "FIELDS must include x y z"));
    };
    let ii = col("intensity");
    let li = col("label");
    let nf = header.fields.len();

    let mut points = Vec::with_capacity(header.points);
    let mut labels = li.map(|_| Vec::with_capacity(header.points));
    let mut last_line = 0;
    for (no, raw) in lines {
        last_line = no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if points.len() == header.points {
            return Err(bad(path, no, format!("more than {} data rows", header.points)));
        }
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != nf {
            return Err(bad(path, no, format!("expected {nf} values, found {}", vals.len())));
        }
        let f = |k: usize| -> Result<f64> {
            vals[k]
                .parse::<f64>()
                .map_err(|_| bad(path, no, format!("field {} is not a number: {:?}", header.fields[k], vals[k])))
        };
        let intensity = ii.map(f).transpose()?.unwrap_or(0.0);
        points.push(Point::new(f(xi)?, f(yi)?, f(zi)?, intensity));
        if let (Some(k), Some(out)) = (li, labels.as_mut()) {
            out.push(vals[k].parse::<u32>().map_err(|_| {
                bad(path, no, format!("label is not an unsigned integer: {:?}", vals[k]))
            })?);
        }
    }
    if points.len() != header.points {
        return Err(bad(
            path,
            last_line,
            format!("truncated: header declares {} points, found {}", header.points, points.len()),
        ));
    }
    Ok(PcdCloud {
        cloud: PointCloud::new(points),
        labels,
    })
}
