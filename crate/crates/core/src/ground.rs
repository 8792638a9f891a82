//! Per-ray slope classifier for ground returns.
//!
//! Each azimuth column is walked from the lowest ring upwards. A return is
//! ground while the slope to the previous valid return on the same ray stays
//! below `max_slope_deg` and its height stays below the ground ceiling. The
//! first non-ground return ends the ground run for that ray.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::range_image::{PixelCoord, RangeImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundParams {
    pub max_slope_deg: f64,
    /// Mounting height of the sensor above the ground, meters.
    pub sensor_height: f64,
    /// Tolerance above the nominal ground plane, meters.
    pub height_margin: f64,
}

impl Default for GroundParams {
    fn default() -> Self {
        Self {
            max_slope_deg: 10.0,
            sensor_height: 1.73,
            height_margin: 0.5,
        }
    }
}

impl GroundParams {
    /// Height (sensor frame z) below which a return may be ground.
    pub fn max_ground_height(&self) -> f64 {
        self.height_margin - self.sensor_height
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundMask {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
}

impl GroundMask {
    pub fn none(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            mask: vec![false; rows * cols],
        }
    }

    /// A mask from an external classifier, row-major.
    pub fn from_mask(rows: usize, cols: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (mask.len() / cols.max(1), mask.len() % cols.max(1)),
            });
        }
        Ok(Self { rows, cols, mask })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_ground(&self, p: PixelCoord) -> bool {
        self.mask[p.row * self.cols + p.col]
    }

    /// Row-major mask.
    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|g| **g).count()
    }
}

pub fn classify_ground(img: &RangeImage, params: &GroundParams) -> GroundMask {
    let (rows, cols) = img.shape();
    let mut out = GroundMask::none(rows, cols);
    let max_slope = params.max_slope_deg.to_radians();
    let ceiling = params.max_ground_height();
    let depth = img.depths();
    let xyz = img.points();

    for c in 0..cols {
        let mut prev: Option<[f64; 3]> = None;
        // rows are stored top-down, so the lowest ring is the last row
        for r in (0..rows).rev() {
            let idx = r * cols + c;
            if depth[idx] <= 0.0 {
                continue;
            }
            let p = xyz[idx];
            let ground = p[2] < ceiling
                && match prev {
                    None => true,
                    Some(q) => {
                        let dz = (p[2] - q[2]).abs();
                        let dh = ((p[0] * p[0] + p[1] * p[1]).sqrt()
                            - (q[0] * q[0] + q[1] * q[1]).sqrt())
                        .abs();
                        dz.atan2(dh) < max_slope
                    }
                };
            if !ground {
                break;
            }
            out.mask[idx] = true;
            prev = Some(p);
        }
    }
    out
}
