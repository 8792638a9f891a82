//! Ambient skeleton: returns that belong both to a large Euclidean cluster
//! (a big object) and to a large depth cluster (a coherent surface).

use serde::{Deserialize, Serialize};

use crate::clustering::{filter_small_clusters, ClusterLabeling};
use crate::error::{Error, Result};
use crate::range_image::PixelCoord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkeletonParams {
    /// Minimum Euclidean cluster size (pixels).
    pub min_euclidean_size: usize,
    /// Minimum depth cluster size (pixels).
    pub min_depth_size: usize,
}

impl Default for SkeletonParams {
    fn default() -> Self {
        Self {
            min_euclidean_size: 100,
            min_depth_size: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonMask {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
    count: usize,
}

impl SkeletonMask {
    pub fn from_mask(rows: usize, cols: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (mask.len() / cols.max(1), mask.len() % cols.max(1)),
            });
        }
        let count = mask.iter().filter(|m| **m).count();
        Ok(Self {
            rows,
            cols,
            mask,
            count,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn contains(&self, p: PixelCoord) -> bool {
        self.mask[p.row * self.cols + p.col]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Skeleton pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        let cols = self.cols;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(move |(i, _)| PixelCoord::new(i / cols, i % cols))
    }
}

pub fn extract_skeleton(
    euclid: &ClusterLabeling,
    depth: &ClusterLabeling,
    n_e: usize,
    n_d: usize,
) -> Result<SkeletonMask> {
    if euclid.shape() != depth.shape() {
        return Err(Error::ShapeMismatch {
            expected: euclid.shape(),
            found: depth.shape(),
        });
    }
    let e = filter_small_clusters(euclid, n_e);
    let d = filter_small_clusters(depth, n_d);
    let mask: Vec<bool> = e
        .labels()
        .iter()
        .zip(d.labels())
        .map(|(a, b)| *a > 0 && *b > 0)
        .collect();
    let (rows, cols) = euclid.shape();
    SkeletonMask::from_mask(rows, cols, mask)
}
