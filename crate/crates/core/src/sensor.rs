//! Spinning-LiDAR geometry: ring elevations, azimuth columns and range limits.
//!
//! Rows are ordered from the highest elevation (row 0) downwards. Azimuth is
//! measured from +x, counter-clockwise, in `[0°, 360°)`; column `c` covers
//! `[c·res, (c+1)·res)` and its nominal beam points at the column centre.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_RANGE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SensorModelRepr", into = "SensorModelRepr")]
pub struct SensorModel {
    vertical_angles: Vec<f64>,
    num_cols: usize,
    max_range: f64,
    min_range: f64,
    // cached trig of the nominal beam directions
    row_cos: Vec<f64>,
    row_sin: Vec<f64>,
    col_cos: Vec<f64>,
    col_sin: Vec<f64>,
    /// sin of the ring bin edges, top edge first: outer margins and the
    /// midpoints between adjacent rings.
    ring_edges_sin: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SensorModelRepr {
    vertical_angles: Vec<f64>,
    num_cols: usize,
    max_range: f64,
    #[serde(default = "default_min_range")]
    min_range: f64,
}

fn default_min_range() -> f64 {
    DEFAULT_MIN_RANGE
}

impl TryFrom<SensorModelRepr> for SensorModel {
    type Error = Error;

    fn try_from(r: SensorModelRepr) -> Result<Self> {
        SensorModel::with_min_range(r.vertical_angles, r.num_cols, r.max_range, r.min_range)
    }
}

impl From<SensorModel> for SensorModelRepr {
    fn from(s: SensorModel) -> Self {
        SensorModelRepr {
            vertical_angles: s.vertical_angles,
            num_cols: s.num_cols,
            max_range: s.max_range,
            min_range: s.min_range,
        }
    }
}

impl SensorModel {
    /// Builds a sensor from per-ring elevations in degrees. The angles may be
    /// given ascending or descending but must be strictly monotonic.
    pub fn new(vertical_angles: Vec<f64>, num_cols: usize, max_range: f64) -> Result<Self> {
        Self::with_min_range(vertical_angles, num_cols, max_range, DEFAULT_MIN_RANGE)
    }

    pub fn with_min_range(
        mut vertical_angles: Vec<f64>,
        num_cols: usize,
        max_range: f64,
        min_range: f64,
    ) -> Result<Self> {
        if vertical_angles.len() < 2 {
            return Err(Error::InvalidSensor(format!(
                "need at least 2 rings, got {}",
                vertical_angles.len()
            )));
        }
        if num_cols < 4 {
            return Err(Error::InvalidSensor(format!(
                "need at least 4 columns, got {num_cols}"
            )));
        }
        if !(max_range > 0.0 && max_range.is_finite()) {
            return Err(Error::InvalidSensor(format!("max_range must be > 0, got {max_range}")));
        }
        if !(min_range >= 0.0 && min_range < max_range) {
            return Err(Error::InvalidSensor(format!(
                "min_range must lie in [0, max_range), got {min_range}"
            )));
        }
        if vertical_angles.iter().any(|a| !a.is_finite() || a.abs() >= 90.0) {
            return Err(Error::InvalidSensor("vertical angles must lie in (-90°, 90°)".into()));
        }
        if vertical_angles[0] < vertical_angles[1] {
            vertical_angles.reverse();
        }
        if vertical_angles.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidSensor(
                "vertical angles must be strictly monotonic".into(),
            ));
        }

        let (row_sin, row_cos) = vertical_angles
            .iter()
            .map(|a| a.to_radians().sin_cos())
            .unzip();
        let n = vertical_angles.len();
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(vertical_angles[0] + 0.5 * (vertical_angles[0] - vertical_angles[1]));
        edges.extend(vertical_angles.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        edges.push(vertical_angles[n - 1] - 0.5 * (vertical_angles[n - 2] - vertical_angles[n - 1]));
        let ring_edges_sin = edges
            .iter()
            .map(|e: &f64| e.clamp(-90.0, 90.0).to_radians().sin())
            .collect();
        let res = 360.0 / num_cols as f64;
        let (col_sin, col_cos) = (0..num_cols)
            .map(|c| ((c as f64 + 0.5) * res).to_radians().sin_cos())
            .unzip();

        Ok(Self {
            vertical_angles,
            num_cols,
            max_range,
            min_range,
            row_cos,
            row_sin,
            col_cos,
            col_sin,
            ring_edges_sin,
        })
    }

    /// Evenly spaced rings between `top` and `bottom` degrees (inclusive).
    pub fn uniform(
        num_rings: usize,
        top: f64,
        bottom: f64,
        num_cols: usize,
        max_range: f64,
    ) -> Result<Self> {
        if num_rings < 2 {
            return Err(Error::InvalidSensor(format!(
                "need at least 2 rings, got {num_rings}"
            )));
        }
        let step = (top - bottom) / (num_rings - 1) as f64;
        let angles = (0..num_rings).map(|i| top - step * i as f64).collect();
        Self::new(angles, num_cols, max_range)
    }

    /// Velodyne HDL-64E as mounted on the KITTI car: two laser blocks with
    /// 1/3° and 1/2° spacing.
    pub fn hdl64() -> Self {
        let upper = (0..32).map(|i| 2.0 - i as f64 / 3.0);
        let lower = (0..32).map(|i| -8.83 - 0.5 * i as f64);
        Self::new(upper.chain(lower).collect(), 1800, 120.0).expect("valid preset")
    }

    /// Velodyne HDL-32E: 32 rings from +10.67° to −30.67°.
    pub fn hdl32() -> Self {
        Self::uniform(32, 10.67, -30.67, 1800, 100.0).expect("valid preset")
    }

    /// Velodyne VLP-16: 16 rings at 2° spacing.
    pub fn vlp16() -> Self {
        Self::uniform(16, 15.0, -15.0, 1800, 100.0).expect("valid preset")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "hdl64" => Some(Self::hdl64()),
            "hdl32" => Some(Self::hdl32()),
            "vlp16" => Some(Self::vlp16()),
            _ => None,
        }
    }

    /// Same vertical geometry with a different column count.
    pub fn with_num_cols(&self, num_cols: usize) -> Result<Self> {
        Self::with_min_range(self.vertical_angles.clone(), num_cols, self.max_range, self.min_range)
    }

    pub fn with_max_range(&self, max_range: f64) -> Result<Self> {
        Self::with_min_range(self.vertical_angles.clone(), self.num_cols, max_range, self.min_range)
    }

    pub fn num_rings(&self) -> usize {
        self.vertical_angles.len()
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    /// Elevations in degrees, row 0 first (highest).
    pub fn vertical_angles(&self) -> &[f64] {
        &self.vertical_angles
    }

    /// Degrees per column.
    pub fn horizontal_resolution(&self) -> f64 {
        360.0 / self.num_cols as f64
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn min_range(&self) -> f64 {
        self.min_range
    }

    /// Nominal azimuth (degrees) of a column centre.
    pub fn column_azimuth(&self, col: usize) -> f64 {
        (col as f64 + 0.5) * self.horizontal_resolution()
    }

    /// Unit vector of the nominal beam for pixel `(row, col)`.
    #[inline]
    pub fn beam_direction(&self, row: usize, col: usize) -> [f64; 3] {
        let ce = self.row_cos[row];
        [ce * self.col_cos[col], ce * self.col_sin[col], self.row_sin[row]]
    }

    /// Nearest ring for an elevation, or `None` when the elevation lies more
    /// than half a ring spacing outside the outermost rings.
    pub fn ring_for_elevation(&self, elevation_deg: f64) -> Option<usize> {
        let a = &self.vertical_angles;
        let n = a.len();
        let top_margin = 0.5 * (a[0] - a[1]);
        let bottom_margin = 0.5 * (a[n - 2] - a[n - 1]);
        if elevation_deg > a[0] + top_margin || elevation_deg < a[n - 1] - bottom_margin {
            return None;
        }
        // first index whose angle is <= elevation (angles descend)
        let idx = a.partition_point(|&v| v > elevation_deg);
        if idx == 0 {
            return Some(0);
        }
        if idx == n {
            return Some(n - 1);
        }
        if a[idx - 1] - elevation_deg <= elevation_deg - a[idx] {
            Some(idx - 1)
        } else {
            Some(idx)
        }
    }

    /// [`ring_for_elevation`](Self::ring_for_elevation) given `sin(elevation)`.
    #[inline]
    pub(crate) fn ring_for_sin_elevation(&self, s: f64) -> Option<usize> {
        let e = &self.ring_edges_sin;
        let n = e.len() - 1;
        if !(s <= e[0] && s >= e[n]) {
            return None;
        }
        Some(e[1..n].partition_point(|&v| v > s))
    }

    /// Column for an azimuth in radians, either from `atan2` (`[-π, π]`) or
    /// already wrapped into `[0, 2π)`.
    #[inline]
    pub(crate) fn column_for_azimuth_rad(&self, az: f64) -> usize {
        let az = if az < 0.0 { az + std::f64::consts::TAU } else { az };
        let col = (az * (self.num_cols as f64 / std::f64::consts::TAU)) as usize;
        col.min(self.num_cols - 1)
    }

    /// Column for an azimuth in degrees (any value; wrapped into `[0°, 360°)`).
    pub fn column_for_azimuth(&self, azimuth_deg: f64) -> usize {
        self.column_for_azimuth_rad(azimuth_deg.rem_euclid(360.0).to_radians())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_geometry() {
        assert!(SensorModel::new(vec![0.0], 8, 10.0).is_err());
        assert!(SensorModel::new(vec![0.0, 1.0], 3, 10.0).is_err());
        assert!(SensorModel::new(vec![0.0, 1.0], 8, 0.0).is_err());
        assert!(SensorModel::new(vec![0.0, 1.0, 1.0], 8, 10.0).is_err());
        assert!(SensorModel::new(vec![0.0, 2.0, 1.0], 8, 10.0).is_err());
    }

    #[test]
    fn ascending_angles_are_stored_top_first() {
        let s = SensorModel::new(vec![-2.0, 0.0, 2.0], 8, 10.0).unwrap();
        assert_eq!(s.vertical_angles(), &[2.0, 0.0, -2.0]);
    }

    #[test]
    fn ring_binning_is_nearest_with_half_spacing_margin() {
        let s = SensorModel::new(vec![2.0, 0.0, -2.0], 8, 10.0).unwrap();
        assert_eq!(s.ring_for_elevation(2.9), Some(0));
        assert_eq!(s.ring_for_elevation(3.1), None);
        assert_eq!(s.ring_for_elevation(0.9), Some(1));
        assert_eq!(s.ring_for_elevation(1.1), Some(0));
        assert_eq!(s.ring_for_elevation(-2.9), Some(2));
        assert_eq!(s.ring_for_elevation(-3.1), None);
    }

    #[test]
    fn sine_and_radian_paths_agree() {
        let s = SensorModel::hdl64();
        for i in 0..4000 {
            let e = -30.0 + i as f64 * 0.0123;
            assert_eq!(s.ring_for_sin_elevation(e.to_radians().sin()), s.ring_for_elevation(e), "{e}");
        }
        for c in 0..s.num_cols() {
            let az = s.column_azimuth(c);
            assert_eq!(s.column_for_azimuth(az), c);
            assert_eq!(s.column_for_azimuth(az - 360.0), c);
            let a = if az > 180.0 { az - 360.0 } else { az };
            assert_eq!(s.column_for_azimuth_rad(a.to_radians()), c);
        }
    }

    #[test]
    fn columns_wrap() {
        let s = SensorModel::new(vec![1.0, 0.0], 1800, 10.0).unwrap();
        assert_eq!(s.column_for_azimuth(0.0), 0);
        assert_eq!(s.column_for_azimuth(0.19), 0);
        assert_eq!(s.column_for_azimuth(0.21), 1);
        assert_eq!(s.column_for_azimuth(-0.1), 1799);
        assert_eq!(s.column_for_azimuth(360.0), 0);
    }

    #[test]
    fn presets() {
        let s = SensorModel::hdl64();
        assert_eq!(s.num_rings(), 64);
        assert_eq!(s.num_cols(), 1800);
        assert!((s.horizontal_resolution() - 0.2).abs() < 1e-12);
        assert_eq!(SensorModel::vlp16().num_rings(), 16);
        assert!(SensorModel::preset("nope").is_none());
    }

    #[test]
    fn serde_round_trip_validates() {
        let s = SensorModel::vlp16();
        let json = serde_json::to_string(&s).unwrap();
        let back: SensorModel = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
        let bad = r#"{"vertical_angles":[1.0],"num_cols":8,"max_range":10.0}"#;
        assert!(serde_json::from_str::<SensorModel>(bad).is_err());
    }
}
