use serde::{Deserialize, Serialize};

use super::alpha_table;
use super::labeling::{build, check_aligned, eligible_pixels, flood_fill, ClusterLabeling, ClusterMethod};
use crate::error::{Error, Result};
use crate::ground::GroundMask;
use crate::range_image::RangeImage;

const FOUR_NEIGHBORS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthClusterParams {
    /// Segmentation threshold β₀ in degrees.
    pub beta0_deg: f64,
}

impl DepthClusterParams {
    pub fn new(beta0_deg: f64) -> Result<Self> {
        if !(beta0_deg > 0.0 && beta0_deg < 90.0) {
            return Err(Error::InvalidInput(format!(
                "beta0 must lie in (0°, 90°), got {beta0_deg}"
            )));
        }
        Ok(Self { beta0_deg })
    }
}

/// Angle (degrees) at the farther return between the segment joining two
/// returns and the farther beam. Argument order does not matter: the longer
/// depth plays ‖OA‖, which keeps the denominator positive, so the result
/// lies in `(0°, 90°)`; equal depths give `90° − α/2`.
pub fn beta(depth_a: f64, depth_b: f64, alpha_deg: f64) -> Result<f64> {
    for d in [depth_a, depth_b] {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidDepth(d));
        }
    }
    if !(alpha_deg > 0.0 && alpha_deg < 180.0) {
        return Err(Error::InvalidInput(format!(
            "beam separation must lie in (0°, 180°), got {alpha_deg}"
        )));
    }
    let (oa, ob) = if depth_a >= depth_b {
        (depth_a, depth_b)
    } else {
        (depth_b, depth_a)
    };
    let (s, c) = alpha_deg.to_radians().sin_cos();
    Ok((ob * s).atan2(oa - ob * c).to_degrees())
}

pub fn depth_cluster(
    img: &RangeImage,
    ground: &GroundMask,
    params: &DepthClusterParams,
) -> Result<ClusterLabeling> {
    check_aligned(img, ground)?;
    DepthClusterParams::new(params.beta0_deg)?;
    let (rows, cols) = img.shape();
    let eligible = eligible_pixels(img, ground);
    let alphas = alpha_table(img, &FOUR_NEIGHBORS);
    let tan_beta0 = params.beta0_deg.to_radians().tan();
    let depth = img.depths();

    // β = atan2(y, x) with y > 0, so β > β₀ ⇔ y > x·tan β₀ for β₀ in (0°, 90°)
    let (labels, sizes) = flood_fill(rows, cols, &eligible, &FOUR_NEIGHBORS, |a, b, ra, k| {
        let Some((s, c)) = alphas[ra * FOUR_NEIGHBORS.len() + k] else {
            return false;
        };
        let (da, db) = (depth[a], depth[b]);
        let (oa, ob) = if da >= db { (da, db) } else { (db, da) };
        ob * s > (oa - ob * c) * tan_beta0
    });
    Ok(build(
        img,
        labels,
        sizes,
        ClusterMethod::Depth {
            beta0_deg: params.beta0_deg,
        },
    ))
}
