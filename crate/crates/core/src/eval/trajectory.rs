use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};
use serde::Serialize;

use crate::error::{Error, Result};

pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

/// Rigid poses indexed by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<Isometry3<f64>>,
}

impl Trajectory {
    pub fn new(poses: Vec<Isometry3<f64>>) -> Self {
        Self { poses }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Builds a pose from a row-major 3×4 `[R | t]`, rejecting rotations that
    /// are not orthonormal within [`ORTHONORMAL_TOLERANCE`].
    pub fn pose_from_3x4(m: &[f64; 12]) -> Result<Isometry3<f64>> {
        let r = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(err <= ORTHONORMAL_TOLERANCE) || !(r.determinant() > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rotation not orthonormal (max |RᵀR − I| = {err:.3e})"
            )));
        }
        let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
        Ok(Isometry3::from_parts(Translation3::new(m[3], m[7], m[11]), rot))
    }

    pub fn pose_to_3x4(p: &Isometry3<f64>) -> [f64; 12] {
        let r = p.rotation.to_rotation_matrix();
        let r = r.matrix();
        let t = p.translation.vector;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
        ]
    }
}

/// Relative pose error of one frame pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpeEntry {
    pub frame: usize,
    /// ‖trans(Eᵢ)‖, meters.
    pub translation: f64,
    /// Rotation angle of Eᵢ, degrees.
    pub rotation_deg: f64,
    #[serde(skip)]
    pub error: Isometry3<f64>,
}

/// `Eᵢ = (Qᵢ⁻¹ Qᵢ₊Δ)⁻¹ (Pᵢ⁻¹ Pᵢ₊Δ)` for every `i` with `i + Δ` in range,
/// `P` the estimate and `Q` the ground truth.
pub fn rpe(est: &Trajectory, gt: &Trajectory, delta: usize) -> Result<Vec<RpeEntry>> {
    if est.len() != gt.len() {
        return Err(Error::LengthMismatch(est.len(), gt.len()));
    }
    if delta == 0 {
        return Err(Error::InvalidInput("delta must be ≥ 1".into()));
    }
    if est.len() < delta + 1 {
        return Err(Error::InvalidInput(format!(
            "need at least {} poses for delta {delta}, got {}",
            delta + 1,
            est.len()
        )));
    }
    Ok((0..est.len() - delta)
        .map(|i| {
            let gt_rel = gt.poses[i].inverse() * gt.poses[i + delta];
            let est_rel = est.poses[i].inverse() * est.poses[i + delta];
            let e = gt_rel.inverse() * est_rel;
            RpeEntry {
                frame: i,
                translation: e.translation.vector.norm(),
                rotation_deg: e.rotation.angle().to_degrees(),
                error: e,
            }
        })
        .collect())
}

/// Root mean square of `errors`.
pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

/// Straight-line trajectory with `step` meters between frames along +x.
pub fn straight_line(n: usize, step: f64) -> Trajectory {
    Trajectory::new(
        (0..n)
            .map(|i| Isometry3::translation(step * i as f64, 0.0, 0.0))
            .collect(),
    )
}

/// Applies `t · pose` to every pose.
pub fn transform_trajectory(traj: &Trajectory, t: &Isometry3<f64>) -> Trajectory {
    Trajectory::new(traj.poses.iter().map(|p| t * p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn rmse_values() {
        assert_eq!(rmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[2.5; 7]).unwrap() - 2.5).abs() < 1e-15);
        assert!(matches!(rmse(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn rpe_errors() {
        let a = straight_line(5, 1.0);
        let b = straight_line(4, 1.0);
        assert!(matches!(rpe(&a, &b, 1), Err(Error::LengthMismatch(5, 4))));
        assert!(rpe(&a, &a, 5).is_err());
        assert!(rpe(&a, &a, 0).is_err());
    }

    #[test]
    fn pose_parsing_checks_rotation() {
        let ok = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 3.0];
        let p = Trajectory::pose_from_3x4(&ok).unwrap();
        assert_eq!(p.translation.vector, Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(Trajectory::pose_to_3x4(&p), ok);
        let scaled = [2.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 3.0];
        assert!(Trajectory::pose_from_3x4(&scaled).is_err());
        let mirrored = [-1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 3.0];
        assert!(Trajectory::pose_from_3x4(&mirrored).is_err());
    }
}
