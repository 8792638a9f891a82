use serde::{Deserialize, Serialize};

use super::alpha_table;
use super::labeling::{build, check_aligned, eligible_pixels, flood_fill, ClusterLabeling, ClusterMethod};
use crate::error::{Error, Result};
use crate::ground::GroundMask;
use crate::range_image::{column_offsets, RangeImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EuclideanClusterParams {
    /// Redundancy factor γ applied once to the depth-scaled spacing.
    pub gamma: f64,
    /// Search half-width in pixels; 2 gives a 5×5 window.
    pub window: usize,
}

impl Default for EuclideanClusterParams {
    fn default() -> Self {
        Self {
            gamma: 1.2,
            window: 2,
        }
    }
}

impl EuclideanClusterParams {
    pub fn new(gamma: f64, window: usize) -> Result<Self> {
        let p = Self { gamma, window };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be ≥ 1, got {}", self.gamma)));
        }
        if self.window < 1 {
            return Err(Error::InvalidInput("window must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Depth-scaled joining distance `d₀ = γ·sin α·‖OB‖`, with ‖OB‖ the nearer of
/// the two returns.
pub fn adaptive_threshold(depth_b: f64, alpha_deg: f64, gamma: f64) -> Result<f64> {
    if !(depth_b > 0.0) || !depth_b.is_finite() {
        return Err(Error::InvalidDepth(depth_b));
    }
    Ok(gamma * alpha_deg.to_radians().sin() * depth_b)
}

fn window_offsets(img: &RangeImage, window: usize) -> Vec<(isize, isize)> {
    let w = window as isize;
    let cols = column_offsets(window, img.cols());
    (-w..=w)
        .flat_map(|dr| cols.iter().map(move |&dc| (dr, dc)))
        .filter(|&o| o != (0, 0))
        .collect()
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Adaptive Euclidean clustering over the range-image window: two returns
/// join when their distance is below [`adaptive_threshold`] evaluated at the
/// nearer depth and the true beam separation of the pixel pair.
pub fn euclidean_cluster(
    img: &RangeImage,
    ground: &GroundMask,
    params: &EuclideanClusterParams,
) -> Result<ClusterLabeling> {
    check_aligned(img, ground)?;
    params.validate()?;
    let (rows, cols) = img.shape();
    let eligible = eligible_pixels(img, ground);
    let offsets = window_offsets(img, params.window);
    // (γ·sin α)² per (row, offset); sign-free since sin α ≥ 0 here
    let scale: Vec<f64> = alpha_table(img, &offsets)
        .into_iter()
        .map(|a| a.map_or(-1.0, |(s, _)| (params.gamma * s).powi(2)))
        .collect();
    let depth = img.depths();
    let xyz = img.points();
    let n_off = offsets.len();

    let (labels, sizes) = flood_fill(rows, cols, &eligible, &offsets, |a, b, ra, k| {
        let ob = depth[a].min(depth[b]);
        dist2(xyz[a], xyz[b]) < scale[ra * n_off + k] * ob * ob
    });
    Ok(build(
        img,
        labels,
        sizes,
        ClusterMethod::AdaptiveEuclidean {
            gamma: params.gamma,
            window: params.window,
        },
    ))
}

/// Range-image Euclidean clustering with a constant joining distance `eps`.
pub fn fixed_euclidean_cluster(
    img: &RangeImage,
    ground: &GroundMask,
    eps: f64,
    window: usize,
) -> Result<ClusterLabeling> {
    check_aligned(img, ground)?;
    if !(eps > 0.0) || window < 1 {
        return Err(Error::InvalidInput(format!(
            "need eps > 0 and window ≥ 1, got {eps}, {window}"
        )));
    }
    let (rows, cols) = img.shape();
    let eligible = eligible_pixels(img, ground);
    let offsets = window_offsets(img, window);
    let xyz = img.points();
    let eps2 = eps * eps;
    let (labels, sizes) = flood_fill(rows, cols, &eligible, &offsets, |a, b, _, _| {
        dist2(xyz[a], xyz[b]) < eps2
    });
    Ok(build(
        img,
        labels,
        sizes,
        ClusterMethod::FixedEuclidean { eps, window },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::SensorModel;

    #[test]
    fn threshold_values() {
        let d0 = adaptive_threshold(10.0, 0.2, 1.2).unwrap();
        let expected = 1.2 * (0.2f64 * std::f64::consts::PI / 180.0).sin() * 10.0;
        assert!((d0 - expected).abs() < 1e-12);
        assert!((d0 - 0.04189).abs() < 1e-5);
        assert!((adaptive_threshold(1.0, 90.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let a = adaptive_threshold(3.0, 0.4, 1.2).unwrap();
        let b = adaptive_threshold(6.0, 0.4, 1.2).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
        assert!(matches!(
            adaptive_threshold(0.0, 0.2, 1.2),
            Err(Error::InvalidDepth(_))
        ));
    }

    #[test]
    fn params_validated() {
        assert!(EuclideanClusterParams::new(0.9, 2).is_err());
        assert!(EuclideanClusterParams::new(1.2, 0).is_err());
        assert!(EuclideanClusterParams::new(1.0, 1).is_ok());
    }

    #[test]
    fn uniform_shell_is_one_cluster() {
        let s = SensorModel::vlp16().with_num_cols(120).unwrap();
        let img = RangeImage::from_depths(&s, &vec![12.0; 16 * 120]).unwrap();
        let g = GroundMask::none(16, 120);
        let l = euclidean_cluster(&img, &g, &EuclideanClusterParams::default()).unwrap();
        assert_eq!(l.num_clusters(), 1);
    }

    #[test]
    fn window_offsets_exclude_center() {
        let s = SensorModel::vlp16().with_num_cols(120).unwrap();
        let img = RangeImage::from_depths(&s, &vec![12.0; 16 * 120]).unwrap();
        let o = window_offsets(&img, 2);
        assert_eq!(o.len(), 24);
        assert!(!o.contains(&(0, 0)));
    }
}
