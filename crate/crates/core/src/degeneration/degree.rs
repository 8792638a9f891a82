use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::eigen::sym2_major_angle;
use super::{Clamped, NormalFeature};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegenerationParams {
    pub beta0_min: f64,
    pub beta0_max: f64,
    /// Below this many features the frame falls back to `beta0_min`.
    pub min_features: usize,
}

impl Default for DegenerationParams {
    fn default() -> Self {
        Self {
            beta0_min: 10.0,
            beta0_max: 60.0,
            min_features: 10,
        }
    }
}

impl DegenerationParams {
    pub fn validate(&self) -> Result<()> {
        check_bounds(self.beta0_min, self.beta0_max)
    }
}

fn check_bounds(beta0_min: f64, beta0_max: f64) -> Result<()> {
    if !(beta0_min > 0.0 && beta0_min < beta0_max && beta0_max < 90.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < beta0_min < beta0_max < 90, got [{beta0_min}, {beta0_max}]"
        )));
    }
    Ok(())
}

/// Anisotropy of a horizontal normal field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerationDegree {
    /// Along-axis over across-axis mass, `≥ 1`, possibly infinite.
    pub k: f64,
    pub mu: f64,
    /// Unit major axis in the x-y plane, sign fixed so the first non-zero
    /// component is positive.
    pub principal_direction: [f64; 2],
}

/// Per-frame degeneration summary. `k` serializes as `null` when infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationReport {
    #[serde(serialize_with = "ser_k", deserialize_with = "de_k")]
    pub k: f64,
    pub mu: f64,
    pub principal_direction: Option<[f64; 2]>,
    pub beta0_dynamic: f64,
    pub num_features: usize,
    pub frame_id: u64,
    /// True when too few features were found and `beta0_min` was used.
    #[serde(default)]
    pub fallback: bool,
}

fn ser_k<S: Serializer>(k: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if k.is_finite() {
        s.serialize_some(k)
    } else {
        s.serialize_none()
    }
}

fn de_k<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Reduces weighted normals to `k` and `μ`.
///
/// The horizontal components `vᵢ = wᵢ·(n̂ᵢ.x, n̂ᵢ.y)` are rotated into the
/// frame of their principal axes (second-moment matrix, not centred, since
/// normals are axial data) and `k = Σ|x′ᵢ| / Σ|y′ᵢ|`, clamped to at least 1.
pub fn degeneration_degree(
    features: &[NormalFeature],
    min_features: usize,
) -> Result<DegenerationDegree> {
    if features.len() < min_features.max(1) {
        return Err(Error::InsufficientFeatures {
            required: min_features.max(1),
            found: features.len(),
        });
    }
    let vs: Vec<[f64; 2]> = features
        .iter()
        .map(|f| {
            let v = f.vector();
            [v[0], v[1]]
        })
        .collect();
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for v in &vs {
        sxx += v[0] * v[0];
        sxy += v[0] * v[1];
        syy += v[1] * v[1];
    }
    if sxx + syy == 0.0 {
        return Err(Error::InsufficientFeatures {
            required: min_features.max(1),
            found: 0,
        });
    }
    let theta = sym2_major_angle(sxx, sxy, syy);
    let (s, c) = theta.sin_cos();
    let mut major = [c, s];
    if major[0] < 0.0 || (major[0] == 0.0 && major[1] < 0.0) {
        major = [-major[0], -major[1]];
    }
    let minor = [-major[1], major[0]];

    let (mut along, mut across) = (0.0, 0.0);
    for v in &vs {
        along += (v[0] * major[0] + v[1] * major[1]).abs();
        across += (v[0] * minor[0] + v[1] * minor[1]).abs();
    }
    let k = if across == 0.0 {
        f64::INFINITY
    } else {
        (along / across).max(1.0)
    };
    Ok(DegenerationDegree {
        k,
        mu: 1.0 - 1.0 / k,
        principal_direction: major,
    })
}

/// `β₀ = μ·(β₀_min − β₀_max) + β₀_max`. Out-of-range `μ` is clamped to
/// `[0, 1]` and flagged.
pub fn map_threshold(mu: f64, beta0_min: f64, beta0_max: f64) -> Result<Clamped> {
    check_bounds(beta0_min, beta0_max)?;
    if mu.is_nan() {
        return Err(Error::InvalidInput("mu is NaN".into()));
    }
    let clamped = !(0.0..=1.0).contains(&mu);
    let mu = mu.clamp(0.0, 1.0);
    Ok(Clamped {
        value: mu * (beta0_min - beta0_max) + beta0_max,
        clamped,
    })
}

/// Full per-frame analysis: degree, mapped threshold, and the conservative
/// fallback to `beta0_min` when the field is too sparse to analyse.
pub fn analyze(
    features: &[NormalFeature],
    params: &DegenerationParams,
    frame_id: u64,
) -> Result<DegenerationReport> {
    params.validate()?;
    match degeneration_degree(features, params.min_features) {
        Ok(d) => {
            let beta = map_threshold(d.mu, params.beta0_min, params.beta0_max)?;
            Ok(DegenerationReport {
                k: d.k,
                mu: d.mu,
                principal_direction: Some(d.principal_direction),
                beta0_dynamic: beta.value,
                num_features: features.len(),
                frame_id,
                fallback: false,
            })
        }
        Err(Error::InsufficientFeatures { required, found }) => {
            log::debug!(
                "frame {frame_id}: {found} usable normal features (< {required}), using beta0_min"
            );
            Ok(DegenerationReport {
                k: f64::INFINITY,
                mu: 1.0,
                principal_direction: None,
                beta0_dynamic: params.beta0_min,
                num_features: features.len(),
                frame_id,
                fallback: true,
            })
        }
        Err(e) => Err(e),
    }
}
