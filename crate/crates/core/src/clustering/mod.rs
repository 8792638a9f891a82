//! Range-image clusterers.
//!
//! * [`depth_cluster`]: 4-neighbour labeling that joins two returns when the
//!   angle between their connecting segment and the farther beam exceeds β₀.
//! * [`euclidean_cluster`]: window labeling that joins two returns when their
//!   3D distance is below a threshold that grows with depth.
//!
//! Both label every valid non-ground pixel; singletons are clusters too.

mod depth;
mod euclidean;
mod labeling;

pub use depth::{beta, depth_cluster, DepthClusterParams};
pub use euclidean::{
    adaptive_threshold, euclidean_cluster, fixed_euclidean_cluster, EuclideanClusterParams,
};
pub use labeling::{filter_small_clusters, ClusterLabeling, ClusterMethod};

use crate::range_image::{beam_angle_between, RangeImage};

/// `(sin α, cos α)` for every (source row, offset) pair, where α is the angle
/// between the nominal beams. `None` where the offset leaves the image.
/// Beam geometry is invariant under azimuth rotation, so column 0 stands in
/// for every column.
fn alpha_table(img: &RangeImage, offsets: &[(isize, isize)]) -> Vec<Option<(f64, f64)>> {
    let sensor = img.sensor();
    let (rows, cols) = img.shape();
    let mut out = Vec::with_capacity(rows * offsets.len());
    for r in 0..rows {
        let u = sensor.beam_direction(r, 0);
        for &(dr, dc) in offsets {
            let rb = r as isize + dr;
            if rb < 0 || rb >= rows as isize {
                out.push(None);
                continue;
            }
            let v = sensor.beam_direction(rb as usize, dc.rem_euclid(cols as isize) as usize);
            out.push(Some(beam_angle_between(u, v).sin_cos()));
        }
    }
    out
}
