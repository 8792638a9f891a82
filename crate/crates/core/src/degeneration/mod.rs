//! Scene degeneration from the skeleton's normal field.
//!
//! Weighted normals are projected onto the horizontal plane, their principal
//! axis is found, and the ratio `k` of along-axis to across-axis mass gives
//! the degeneration degree `μ = 1 − 1/k`. `μ` is then mapped linearly onto the
//! depth-clustering threshold range, strict for rich scenes and lenient for
//! degenerate ones.

mod degree;
mod eigen;
mod normals;

pub use degree::{analyze, degeneration_degree, map_threshold, DegenerationDegree, DegenerationParams, DegenerationReport};
pub use normals::{
    extract_normal_field, neighborhood_set, normal_weight, pca_normal, NormalFeature,
    NormalFieldParams,
};

use serde::{Deserialize, Serialize};

/// A value forced into its valid range, with a flag recording whether that
/// happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamped {
    pub value: f64,
    pub clamped: bool,
}
