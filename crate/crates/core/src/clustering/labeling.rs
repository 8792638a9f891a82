use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::GroundMask;
use crate::range_image::{PixelCoord, RangeImage};

/// Which clusterer produced a labeling, with its thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClusterMethod {
    Depth { beta0_deg: f64 },
    AdaptiveEuclidean { gamma: f64, window: usize },
    FixedEuclidean { eps: f64, window: usize },
    /// Labels supplied from outside (ground truth, external tools).
    External,
}

/// Per-pixel cluster ids. `0` means unlabeled (empty, ground or removed);
/// ids start at 1 and follow row-major discovery order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabeling {
    rows: usize,
    cols: usize,
    labels: Vec<u32>,
    sizes: BTreeMap<u32, usize>,
    method: ClusterMethod,
}

impl ClusterLabeling {
    /// Wraps an arbitrary row-major label grid, recomputing cluster sizes.
    pub fn from_labels(
        rows: usize,
        cols: usize,
        labels: Vec<u32>,
        method: ClusterMethod,
    ) -> Result<Self> {
        if labels.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (labels.len() / cols.max(1), labels.len() % cols.max(1)),
            });
        }
        let mut sizes = BTreeMap::new();
        for &l in labels.iter().filter(|l| **l > 0) {
            *sizes.entry(l).or_insert(0) += 1;
        }
        Ok(Self {
            rows,
            cols,
            labels,
            sizes,
            method,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn method(&self) -> ClusterMethod {
        self.method
    }

    #[inline]
    pub fn label(&self, p: PixelCoord) -> u32 {
        self.labels[p.row * self.cols + p.col]
    }

    /// Row-major label grid.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn cluster_sizes(&self) -> &BTreeMap<u32, usize> {
        &self.sizes
    }

    pub fn cluster_size(&self, id: u32) -> usize {
        self.sizes.get(&id).copied().unwrap_or(0)
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn labeled_count(&self) -> usize {
        self.sizes.values().sum()
    }

    /// Pixel indices grouped by cluster id.
    pub fn members(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (idx, &l) in self.labels.iter().enumerate() {
            if l > 0 {
                out.entry(l).or_default().push(idx);
            }
        }
        out
    }
}

/// Unlabels every cluster smaller than `min_size`. Surviving clusters keep
/// their ids.
pub fn filter_small_clusters(labeling: &ClusterLabeling, min_size: usize) -> ClusterLabeling {
    let mut out = labeling.clone();
    if min_size <= 1 {
        return out;
    }
    out.sizes.retain(|_, n| *n >= min_size);
    let max_id = labeling.sizes.keys().next_back().copied().unwrap_or(0) as usize;
    let mut keep = vec![false; max_id + 1];
    for &id in out.sizes.keys() {
        keep[id as usize] = true;
    }
    for l in out.labels.iter_mut() {
        if !keep[*l as usize] {
            *l = 0;
        }
    }
    out
}

pub(crate) fn check_aligned(img: &RangeImage, ground: &GroundMask) -> Result<()> {
    if img.shape() != ground.shape() {
        return Err(Error::ShapeMismatch {
            expected: img.shape(),
            found: ground.shape(),
        });
    }
    Ok(())
}

/// Valid, non-ground pixels.
pub(crate) fn eligible_pixels(img: &RangeImage, ground: &GroundMask) -> Vec<bool> {
    img.depths()
        .iter()
        .zip(ground.as_slice())
        .map(|(d, g)| *d > 0.0 && !g)
        .collect()
}

/// Connected-component labeling over a row-major grid whose columns wrap.
/// `accept(a, b, row_a, k)` decides the edge from pixel `a` to pixel `b`
/// reached through `offsets[k]`; it must be symmetric.
///
/// One raster pass over forward offsets with a union-find whose root is the
/// smallest pixel index, so components are numbered by their first pixel in
/// row-major order.
pub(crate) fn flood_fill<F>(
    rows: usize,
    cols: usize,
    eligible: &[bool],
    offsets: &[(isize, isize)],
    mut accept: F,
) -> (Vec<u32>, BTreeMap<u32, usize>)
where
    F: FnMut(usize, usize, usize, usize) -> bool,
{
    let n = rows * cols;
    let (irows, icols) = (rows as isize, cols as isize);
    // when column offsets were folded by the wrap, same-row offsets are not
    // symmetric and both directions are kept
    let folded = {
        let mut same_row: Vec<isize> = offsets.iter().filter(|o| o.0 == 0).map(|o| o.1).collect();
        same_row.sort_unstable();
        same_row.iter().any(|&dc| dc != 0 && !same_row.contains(&-dc))
    };
    let forward: Vec<usize> = (0..offsets.len())
        .filter(|&k| {
            let (dr, dc) = offsets[k];
            dr > 0 || (dr == 0 && (dc > 0 || (folded && dc != 0)))
        })
        .collect();
    let reach_r = offsets.iter().map(|o| o.0.abs()).max().unwrap_or(0);
    let reach_c = offsets.iter().map(|o| o.1.abs()).max().unwrap_or(0);
    let linear: Vec<isize> = offsets.iter().map(|&(dr, dc)| dr * icols + dc).collect();

    let mut parent: Vec<u32> = (0..n as u32).collect();
    let find = |parent: &mut [u32], mut x: u32| {
        while parent[x as usize] != x {
            let up = parent[parent[x as usize] as usize];
            parent[x as usize] = up;
            x = up;
        }
        x
    };

    for ra in 0..rows {
        let ri = ra as isize;
        let row_interior = ri >= reach_r && ri < irows - reach_r;
        for ca in 0..cols {
            let a = ra * cols + ca;
            if !eligible[a] {
                continue;
            }
            let ci = ca as isize;
            let interior = row_interior && ci >= reach_c && ci < icols - reach_c;
            let mut root_a = find(&mut parent, a as u32);
            for &k in &forward {
                let b = if interior {
                    (a as isize + linear[k]) as usize
                } else {
                    let (dr, dc) = offsets[k];
                    let rb = ri + dr;
                    if rb >= irows {
                        continue;
                    }
                    (rb * icols + (ci + dc).rem_euclid(icols)) as usize
                };
                if !eligible[b] {
                    continue;
                }
                let root_b = find(&mut parent, b as u32);
                if root_a == root_b {
                    continue;
                }
                if accept(a, b, ra, k) {
                    let (lo, hi) = (root_a.min(root_b), root_a.max(root_b));
                    parent[hi as usize] = lo;
                    root_a = lo;
                }
            }
        }
    }

    // roots are the first pixel of their component, so ids follow discovery
    let mut labels = vec![0u32; n];
    let mut sizes = Vec::new();
    for a in 0..n {
        if !eligible[a] {
            continue;
        }
        let root = find(&mut parent, a as u32) as usize;
        if root == a {
            sizes.push(0usize);
            labels[a] = sizes.len() as u32;
        } else {
            labels[a] = labels[root];
        }
        sizes[labels[a] as usize - 1] += 1;
    }
    let sizes = sizes.into_iter().enumerate().map(|(i, n)| (i as u32 + 1, n)).collect();
    (labels, sizes)
}

pub(crate) fn build(
    img: &RangeImage,
    labels: Vec<u32>,
    sizes: BTreeMap<u32, usize>,
    method: ClusterMethod,
) -> ClusterLabeling {
    ClusterLabeling {
        rows: img.rows(),
        cols: img.cols(),
        labels,
        sizes,
        method,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeling(labels: Vec<u32>) -> ClusterLabeling {
        let n = labels.len();
        ClusterLabeling::from_labels(1, n, labels, ClusterMethod::External).unwrap()
    }

    #[test]
    fn sizes_are_counted() {
        let l = labeling(vec![0, 1, 1, 2, 0, 2, 2]);
        assert_eq!(l.cluster_size(1), 2);
        assert_eq!(l.cluster_size(2), 3);
        assert_eq!(l.labeled_count(), 5);
        assert_eq!(l.num_clusters(), 2);
    }

    #[test]
    fn filter_keeps_large_clusters() {
        let mut labels = vec![1u32; 50];
        labels.extend(vec![2u32; 10]);
        let l = labeling(labels);
        let f = filter_small_clusters(&l, 30);
        assert_eq!(f.num_clusters(), 1);
        assert_eq!(f.cluster_size(1), 50);
        assert_eq!(f.labels().iter().filter(|x| **x == 2).count(), 0);
        assert_eq!(filter_small_clusters(&l, 1), l);
        assert_eq!(filter_small_clusters(&l, 10), l);
    }

    #[test]
    fn folded_wrap_offsets_still_connect() {
        // with 4 columns, a ±2 window folds onto offsets -2, -1, +1
        let offsets = [(0isize, -2isize), (0, -1), (0, 1)];
        let eligible = [true, false, true, false];
        let (labels, sizes) = flood_fill(1, 4, &eligible, &offsets, |_, _, _, _| true);
        assert_eq!(labels, [1, 0, 1, 0]);
        assert_eq!(sizes[&1], 2);
        let (labels, _) = flood_fill(1, 4, &eligible, &offsets, |_, _, _, _| false);
        assert_eq!(labels, [1, 0, 2, 0]);
    }

    #[test]
    fn ids_follow_first_pixel_order() {
        // a U shape on a 3-column ring
        let eligible = [true, false, true, true, false, true, true, true, true];
        let four = [(0isize, 1isize), (1, 0), (0, -1), (-1, 0)];
        let (labels, sizes) = flood_fill(3, 3, &eligible, &four, |_, _, _, _| true);
        assert_eq!(labels, [1, 0, 1, 1, 0, 1, 1, 1, 1]);
        assert_eq!(sizes.len(), 1);
        // vertical edges only: columns become components, numbered by their top pixel
        let (labels, _) = flood_fill(3, 3, &eligible, &four, |a, b, _, _| a % 3 == b % 3);
        assert_eq!(labels, [1, 0, 2, 1, 0, 2, 1, 3, 2]);
    }

    #[test]
    fn shape_checked() {
        assert!(ClusterLabeling::from_labels(2, 3, vec![0; 5], ClusterMethod::External).is_err());
    }
}
