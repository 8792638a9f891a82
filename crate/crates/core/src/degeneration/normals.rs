use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eigen::{sym3_eigenvalues, sym3_eigenvector};
use super::Clamped;
use crate::error::{Error, Result};
use crate::range_image::{column_offsets, wrap_col, PixelCoord, RangeImage};
use crate::skeleton::SkeletonMask;

// below this λ₂/λ₁ the neighbourhood is treated as a line
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalFieldParams {
    /// Fraction of skeleton pixels sampled for normal estimation, in (0, 1].
    pub sample_fraction: f64,
    /// Window half-width in pixels.
    pub window: usize,
    /// Maximum depth difference to the sampled pixel, meters.
    pub depth_gate: f64,
    /// Minimum neighbourhood size for a normal to be kept.
    pub min_neighbors: usize,
    pub seed: u64,
}

impl Default for NormalFieldParams {
    fn default() -> Self {
        Self {
            sample_fraction: 0.10,
            window: 2,
            depth_gate: 0.5,
            min_neighbors: 5,
            seed: 42,
        }
    }
}

impl NormalFieldParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "sample_fraction must lie in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        if self.window < 1 {
            return Err(Error::InvalidInput("window must be ≥ 1".into()));
        }
        if !(self.depth_gate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "depth_gate must be > 0, got {}",
                self.depth_gate
            )));
        }
        if self.min_neighbors < 3 {
            return Err(Error::InvalidInput(format!(
                "min_neighbors must be ≥ 3, got {}",
                self.min_neighbors
            )));
        }
        Ok(())
    }
}

/// A weighted surface normal sampled from the skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFeature {
    /// Unit normal, oriented towards the sensor.
    pub unit_normal: [f64; 3],
    /// Confidence `ln((d_max − d)·N + 1)`.
    pub weight: f64,
    pub source_pixel: PixelCoord,
    pub neighbor_count: usize,
    pub depth: f64,
}

impl NormalFeature {
    /// `weight · unit_normal`.
    pub fn vector(&self) -> [f64; 3] {
        let n = self.unit_normal;
        [self.weight * n[0], self.weight * n[1], self.weight * n[2]]
    }
}

/// Skeleton points in the window around `p` whose depth differs from `p`'s
/// by less than the depth gate. Includes `p` itself.
pub fn neighborhood_set(
    img: &RangeImage,
    skeleton: &SkeletonMask,
    p: PixelCoord,
    params: &NormalFieldParams,
) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    let offsets = column_offsets(params.window, img.cols());
    collect_neighborhood(img, skeleton, p, params, &offsets, &mut out);
    out
}

fn collect_neighborhood(
    img: &RangeImage,
    skeleton: &SkeletonMask,
    p: PixelCoord,
    params: &NormalFieldParams,
    col_offsets: &[isize],
    out: &mut Vec<[f64; 3]>,
) {
    out.clear();
    let (rows, cols) = img.shape();
    let depth = img.depths();
    let xyz = img.points();
    let mask = skeleton.as_slice();
    let center = depth[img.index(p)];
    let r0 = p.row.saturating_sub(params.window);
    let r1 = (p.row + params.window).min(rows - 1);
    for r in r0..=r1 {
        for &dc in col_offsets {
            let idx = r * cols + wrap_col(p.col, dc, cols);
            if mask[idx] && (depth[idx] - center).abs() < params.depth_gate {
                out.push(xyz[idx]);
            }
        }
    }
}

/// Normal of the best-fit plane through `points`: the eigenvector of the
/// smallest eigenvalue of their covariance, flipped to face the origin.
pub fn pca_normal(points: &[[f64; 3]], min_points: usize) -> Result<[f64; 3]> {
    let required = min_points.max(3);
    if points.len() < required {
        return Err(Error::TooFewPoints {
            required,
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mut centroid = [0.0; 3];
    for p in points {
        for k in 0..3 {
            centroid[k] += p[k];
        }
    }
    for c in &mut centroid {
        *c /= n;
    }
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]];
        for i in 0..3 {
            for j in i..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }

    let eig = sym3_eigenvalues(&cov);
    if !(eig[0] > 0.0) || eig[1] <= RANK_TOLERANCE * eig[0] {
        return Err(Error::DegenerateNeighborhood);
    }
    let mut normal = sym3_eigenvector(&cov, eig[2]).ok_or(Error::DegenerateNeighborhood)?;
    let facing = normal[0] * centroid[0] + normal[1] * centroid[1] + normal[2] * centroid[2];
    if facing > 0.0 {
        normal = [-normal[0], -normal[1], -normal[2]];
    }
    Ok(normal)
}

/// Confidence of a normal: `ln((d_max − d)·N + 1)`. Depths beyond `d_max`
/// clamp the range term to zero and are flagged.
pub fn normal_weight(depth: f64, neighbor_count: usize, d_max: f64) -> Result<Clamped> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidDepth(depth));
    }
    let (span, clamped) = if depth > d_max {
        (0.0, true)
    } else {
        (d_max - depth, false)
    };
    Ok(Clamped {
        value: (span * neighbor_count as f64 + 1.0).ln(),
        clamped,
    })
}

/// Samples skeleton pixels with probability `sample_fraction` (seeded, in
/// row-major order) and estimates a weighted normal for each sample whose
/// gated neighbourhood has at least `min_neighbors` points. `d_max` is the
/// sensor's maximum range.
pub fn extract_normal_field(
    img: &RangeImage,
    skeleton: &SkeletonMask,
    params: &NormalFieldParams,
) -> Result<Vec<NormalFeature>> {
    params.validate()?;
    if img.shape() != skeleton.shape() {
        return Err(Error::ShapeMismatch {
            expected: img.shape(),
            found: skeleton.shape(),
        });
    }
    let d_max = img.sensor().max_range();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let offsets = column_offsets(params.window, img.cols());
    let mut buf = Vec::with_capacity((2 * params.window + 1).pow(2));
    let mut features = Vec::new();

    for p in skeleton.pixels() {
        if !rng.random_bool(params.sample_fraction) {
            continue;
        }
        collect_neighborhood(img, skeleton, p, params, &offsets, &mut buf);
        let normal = match pca_normal(&buf, params.min_neighbors) {
            Ok(n) => n,
            Err(Error::TooFewPoints { .. } | Error::DegenerateNeighborhood) => continue,
            Err(e) => return Err(e),
        };
        let depth = img.depth(p);
        let weight = normal_weight(depth, buf.len(), d_max)?;
        features.push(NormalFeature {
            unit_normal: normal,
            weight: weight.value,
            source_pixel: p,
            neighbor_count: buf.len(),
            depth,
        });
    }
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::SensorModel;

    #[test]
    fn weight_values() {
        assert_eq!(normal_weight(10.0, 0, 120.0).unwrap().value, 0.0);
        assert_eq!(normal_weight(120.0, 25, 120.0).unwrap().value, 0.0);
        let w = normal_weight(20.0, 25, 120.0).unwrap();
        assert!((w.value - 2501f64.ln()).abs() < 1e-12);
        assert!((w.value - 7.824).abs() < 1e-3);
        assert!(!w.clamped);
        let over = normal_weight(130.0, 25, 120.0).unwrap();
        assert_eq!(over.value, 0.0);
        assert!(over.clamped);
        assert!(normal_weight(0.0, 5, 120.0).is_err());
    }

    #[test]
    fn horizontal_plane_normal() {
        let pts: Vec<[f64; 3]> = (0..5)
            .flat_map(|i| (0..5).map(move |j| [3.0 + i as f64 * 0.1, j as f64 * 0.1, -1.5]))
            .collect();
        let n = pca_normal(&pts, 5).unwrap();
        // oriented up, towards the sensor above the plane
        assert!((n[2] - 1.0).abs() < 1e-12, "{n:?}");
    }

    #[test]
    fn vertical_diagonal_plane_normal() {
        // plane x + y = 4
        let pts: Vec<[f64; 3]> = (0..5)
            .flat_map(|i| {
                (0..5).map(move |j| {
                    let t = i as f64 * 0.2;
                    [2.0 + t, 2.0 - t, j as f64 * 0.2]
                })
            })
            .collect();
        let n = pca_normal(&pts, 5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n[0] + s).abs() < 1e-12 && (n[1] + s).abs() < 1e-12, "{n:?}");
        assert!(n[2].abs() < 1e-12);
    }

    #[test]
    fn pca_errors() {
        let few = vec![[1.0, 0.0, 0.0]; 4];
        assert!(matches!(pca_normal(&few, 5), Err(Error::TooFewPoints { .. })));
        let line: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, 1.0, 2.0]).collect();
        assert!(matches!(pca_normal(&line, 5), Err(Error::DegenerateNeighborhood)));
        let same = vec![[1.0, 2.0, 3.0]; 6];
        assert!(matches!(pca_normal(&same, 5), Err(Error::DegenerateNeighborhood)));
    }

    fn wall(rows: usize, cols: usize, depth: f64) -> (RangeImage, SkeletonMask) {
        let s = SensorModel::uniform(rows, 2.0, -2.0, cols, 100.0).unwrap();
        let img = RangeImage::from_depths(&s, &vec![depth; rows * cols]).unwrap();
        let mask = SkeletonMask::from_mask(rows, cols, vec![true; rows * cols]).unwrap();
        (img, mask)
    }

    #[test]
    fn full_window_on_flat_wall() {
        let (img, mask) = wall(9, 360, 10.0);
        let n = neighborhood_set(&img, &mask, PixelCoord::new(4, 100), &NormalFieldParams::default());
        assert_eq!(n.len(), 25);
    }

    #[test]
    fn depth_gate_excludes_far_side() {
        let s = SensorModel::uniform(9, 2.0, -2.0, 360, 100.0).unwrap();
        let mut d = vec![10.0; 9 * 360];
        for r in 0..9 {
            for c in 101..110 {
                d[r * 360 + c] = 20.0;
            }
        }
        let img = RangeImage::from_depths(&s, &d).unwrap();
        let mask = SkeletonMask::from_mask(9, 360, vec![true; 9 * 360]).unwrap();
        let n = neighborhood_set(&img, &mask, PixelCoord::new(4, 100), &NormalFieldParams::default());
        assert_eq!(n.len(), 15);
        assert!(n.iter().all(|p| (p[0].hypot(p[1]).hypot(p[2]) - 10.0).abs() < 1e-9));
    }

    #[test]
    fn isolated_pixels_yield_nothing() {
        let (img, _) = wall(9, 360, 10.0);
        let mask: Vec<bool> = (0..9 * 360).map(|i| i % 360 % 3 == 0 && (i / 360) % 3 == 0).collect();
        let mask = SkeletonMask::from_mask(9, 360, mask).unwrap();
        let params = NormalFieldParams {
            sample_fraction: 1.0,
            ..Default::default()
        };
        assert!(extract_normal_field(&img, &mask, &params).unwrap().is_empty());
    }

    #[test]
    fn params_validated() {
        let bad = [
            NormalFieldParams { sample_fraction: 0.0, ..Default::default() },
            NormalFieldParams { sample_fraction: 1.5, ..Default::default() },
            NormalFieldParams { window: 0, ..Default::default() },
            NormalFieldParams { depth_gate: 0.0, ..Default::default() },
            NormalFieldParams { min_neighbors: 2, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }
}
