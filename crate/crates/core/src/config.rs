//! Pipeline configuration, one TOML section per stage.
//!
//! Every field has a default; a config file only needs the keys it changes.
//! `section.key=value` overrides can be applied on top (the CLI's `--set`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::{DepthClusterParams, EuclideanClusterParams};
use crate::degeneration::{DegenerationParams, NormalFieldParams};
use crate::error::{Error, Result};
use crate::ground::GroundParams;
use crate::sensor::{SensorModel, DEFAULT_MIN_RANGE};
use crate::skeleton::SkeletonParams;

/// The shipped default config; parses to [`PipelineConfig::default`].
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// `hdl64`, `hdl32`, `vlp16`, or `custom` (requires `vertical_angles`).
    pub preset: String,
    pub num_cols: usize,
    pub max_range: f64,
    pub min_range: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertical_angles: Option<Vec<f64>>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            preset: "hdl64".into(),
            num_cols: 1800,
            max_range: 120.0,
            min_range: DEFAULT_MIN_RANGE,
            vertical_angles: None,
        }
    }
}

impl SensorConfig {
    pub fn build(&self) -> Result<SensorModel> {
        let angles = match (&self.vertical_angles, self.preset.as_str()) {
            (Some(a), _) => a.clone(),
            (None, "custom") => {
                return Err(Error::Config(
                    "sensor.preset = \"custom\" needs sensor.vertical_angles".into(),
                ))
            }
            (None, name) => SensorModel::preset(name)
                .ok_or_else(|| Error::Config(format!("unknown sensor preset {name:?}")))?
                .vertical_angles()
                .to_vec(),
        };
        SensorModel::with_min_range(angles, self.num_cols, self.max_range, self.min_range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    /// β₀ of the first depth-clustering pass; `beta0_min` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_beta0: Option<f64>,
    /// Frames processed concurrently by `process_sequence`.
    pub workers: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            initial_beta0: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sensor: SensorConfig,
    pub ground: GroundParams,
    pub euclidean: EuclideanClusterParams,
    pub skeleton: SkeletonParams,
    pub normals: NormalFieldParams,
    pub degeneration: DegenerationParams,
    pub pipeline: PipelineSection,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `section.key=value`. The value is read as a TOML literal and
    /// falls back to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let (section, field) = key
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("override key {key:?} is not section.key")))?;
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));

        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let sec = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{section:?} is not a section")))?;
        sec.insert(field.to_string(), value);
        let updated: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{assignment}: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.build()?;
        EuclideanClusterParams::new(self.euclidean.gamma, self.euclidean.window)?;
        self.normals.validate()?;
        self.degeneration.validate()?;
        DepthClusterParams::new(self.initial_beta0())?;
        if self.pipeline.workers == 0 {
            return Err(Error::Config("pipeline.workers must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn initial_beta0(&self) -> f64 {
        self.pipeline
            .initial_beta0
            .unwrap_or(self.degeneration.beta0_min)
    }
}
