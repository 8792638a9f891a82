//! Spherical projection of a cloud onto a dense `rows × cols` depth grid.
//!
//! The grid is the only spatial index in the crate: every neighbourhood query
//! downstream is a window on it. A depth of `0.0` marks an empty pixel.

use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::sensor::SensorModel;

pub const NO_POINT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Per-projection bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionStats {
    pub input_points: usize,
    pub projected: usize,
    pub out_of_range: usize,
    pub out_of_fov: usize,
    /// Points that lost a pixel to a nearer return.
    pub occluded: usize,
}

#[derive(Debug, Clone)]
pub struct RangeImage {
    sensor: SensorModel,
    depth: Vec<f64>,
    point_index: Vec<u32>,
    xyz: Vec<[f64; 3]>,
    stats: ProjectionStats,
}

impl RangeImage {
    /// Projects `cloud` onto the grid of `sensor`, keeping the nearer return on
    /// collisions. Points outside `[min_range, max_range]` or outside the
    /// vertical field of view are dropped.
    pub fn project(cloud: &PointCloud, sensor: &SensorModel) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput);
        }
        let rows = sensor.num_rings();
        let cols = sensor.num_cols();
        let mut img = Self::empty(sensor.clone());
        let mut stats = ProjectionStats {
            input_points: cloud.len(),
            ..Default::default()
        };

        for (i, p) in cloud.points.iter().enumerate() {
            let range = p.range();
            if !range.is_finite() || range < sensor.min_range() || range > sensor.max_range() {
                stats.out_of_range += 1;
                continue;
            }
            let Some(row) = sensor.ring_for_sin_elevation(p.z / range) else {
                stats.out_of_fov += 1;
                continue;
            };
            let col = sensor.column_for_azimuth_rad(p.y.atan2(p.x));
            let idx = row * cols + col;
            debug_assert!(idx < rows * cols);
            let current = img.depth[idx];
            if current == 0.0 {
                stats.projected += 1;
            } else if range < current {
                stats.occluded += 1;
            } else {
                stats.occluded += 1;
                continue;
            }
            img.depth[idx] = range;
            img.point_index[idx] = i as u32;
            img.xyz[idx] = p.xyz();
        }

        if stats.projected == 0 {
            return Err(Error::EmptyProjection);
        }
        img.stats = stats;
        Ok(img)
    }

    /// Builds an image directly from a row-major depth grid, placing each point
    /// on its nominal beam. Zero (or non-positive) entries are empty pixels.
    /// Point indices follow row-major order of the valid pixels, matching the
    /// cloud returned by [`RangeImage::unproject`].
    pub fn from_depths(sensor: &SensorModel, depths: &[f64]) -> Result<Self> {
        let rows = sensor.num_rings();
        let cols = sensor.num_cols();
        if depths.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (depths.len() / cols.max(1), depths.len() % cols.max(1)),
            });
        }
        let mut img = Self::empty(sensor.clone());
        let mut next = 0u32;
        for r in 0..rows {
            for c in 0..cols {
                let idx = r * cols + c;
                let d = depths[idx];
                if d > 0.0 {
                    if d > sensor.max_range() || !d.is_finite() {
                        return Err(Error::InvalidDepth(d));
                    }
                    let u = sensor.beam_direction(r, c);
                    img.depth[idx] = d;
                    img.point_index[idx] = next;
                    img.xyz[idx] = [d * u[0], d * u[1], d * u[2]];
                    next += 1;
                }
            }
        }
        img.stats = ProjectionStats {
            input_points: next as usize,
            projected: next as usize,
            ..Default::default()
        };
        Ok(img)
    }

    fn empty(sensor: SensorModel) -> Self {
        let n = sensor.num_rings() * sensor.num_cols();
        Self {
            sensor,
            depth: vec![0.0; n],
            point_index: vec![NO_POINT; n],
            xyz: vec![[0.0; 3]; n],
            stats: ProjectionStats::default(),
        }
    }

    /// Reconstructs one point per valid pixel, in row-major order, along the
    /// nominal beam direction.
    pub fn unproject(&self) -> PointCloud {
        let cols = self.cols();
        self.depth
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(|(idx, &d)| {
                let u = self.sensor.beam_direction(idx / cols, idx % cols);
                Point::new(d * u[0], d * u[1], d * u[2], 0.0)
            })
            .collect()
    }

    pub fn sensor(&self) -> &SensorModel {
        &self.sensor
    }

    pub fn rows(&self) -> usize {
        self.sensor.num_rings()
    }

    pub fn cols(&self) -> usize {
        self.sensor.num_cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn stats(&self) -> &ProjectionStats {
        &self.stats
    }

    #[inline]
    pub fn index(&self, p: PixelCoord) -> usize {
        p.row * self.cols() + p.col
    }

    #[inline]
    pub fn coord(&self, idx: usize) -> PixelCoord {
        PixelCoord::new(idx / self.cols(), idx % self.cols())
    }

    /// Row-major depth grid in meters, `0.0` for empty pixels.
    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    /// Row-major source-cloud indices, [`NO_POINT`] for empty pixels.
    pub fn point_indices(&self) -> &[u32] {
        &self.point_index
    }

    /// Row-major cartesian coordinates of the stored returns.
    pub fn points(&self) -> &[[f64; 3]] {
        &self.xyz
    }

    #[inline]
    pub fn depth(&self, p: PixelCoord) -> f64 {
        self.depth[self.index(p)]
    }

    #[inline]
    pub fn is_valid(&self, p: PixelCoord) -> bool {
        self.depth(p) > 0.0
    }

    #[inline]
    pub fn point(&self, p: PixelCoord) -> [f64; 3] {
        self.xyz[self.index(p)]
    }

    pub fn point_index(&self, p: PixelCoord) -> Option<usize> {
        match self.point_index[self.index(p)] {
            NO_POINT => None,
            i => Some(i as usize),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|d| **d > 0.0).count()
    }

    /// Fraction of occupied pixels over the whole grid.
    pub fn occupancy(&self) -> f64 {
        self.valid_count() as f64 / self.len() as f64
    }

    /// Valid pixels within `window` rows and (circular) columns of `p`,
    /// excluding `p`. Rows are clipped at the image border.
    pub fn neighbors(&self, p: PixelCoord, window: usize) -> Vec<PixelCoord> {
        let mut out = Vec::with_capacity((2 * window + 1).pow(2));
        let offsets = column_offsets(window, self.cols());
        let r0 = p.row.saturating_sub(window);
        let r1 = (p.row + window).min(self.rows() - 1);
        for r in r0..=r1 {
            for &dc in &offsets {
                let c = wrap_col(p.col, dc, self.cols());
                let q = PixelCoord::new(r, c);
                if q != p && self.is_valid(q) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Angle in degrees between the nominal beams of two pixels.
    pub fn beam_angle(&self, a: PixelCoord, b: PixelCoord) -> Result<f64> {
        if a == b {
            return Err(Error::ZeroSeparation(a, b));
        }
        Ok(beam_angle_between(
            self.sensor.beam_direction(a.row, a.col),
            self.sensor.beam_direction(b.row, b.col),
        )
        .to_degrees())
    }
}

/// Angle in radians between two unit vectors, stable for small separations.
#[inline]
pub(crate) fn beam_angle_between(u: [f64; 3], v: [f64; 3]) -> f64 {
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let c = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    s.atan2(c)
}

/// Distinct column offsets in `-window..=window`, deduplicated modulo `cols`
/// so narrow images never visit a column twice.
pub(crate) fn column_offsets(window: usize, cols: usize) -> Vec<isize> {
    let w = window as isize;
    let mut seen = vec![false; cols];
    let mut out = Vec::with_capacity(2 * window + 1);
    for dc in -w..=w {
        let c = dc.rem_euclid(cols as isize) as usize;
        if !seen[c] {
            seen[c] = true;
            out.push(dc);
        }
    }
    out
}

#[inline]
pub(crate) fn wrap_col(col: usize, dc: isize, cols: usize) -> usize {
    (col as isize + dc).rem_euclid(cols as isize) as usize
}
