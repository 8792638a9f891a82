use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterLabeling;
use crate::error::{Error, Result};
use crate::range_image::RangeImage;

/// Containment slack in meters, so returns lying exactly on a face count as
/// inside.
pub const BOX_EPSILON: f64 = 1e-6;

/// Oriented 3D box, rotated by `yaw` about +z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub center: [f64; 3],
    /// Full extents along the box's own x, y, z axes.
    pub dimensions: [f64; 3],
    pub yaw: f64,
    #[serde(default, rename = "class")]
    pub class_tag: String,
}

impl LabeledBox {
    pub fn new(center: [f64; 3], dimensions: [f64; 3], yaw: f64, class_tag: &str) -> Result<Self> {
        if dimensions.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "box dimensions must be positive, got {dimensions:?}"
            )));
        }
        Ok(Self {
            center,
            dimensions,
            yaw,
            class_tag: class_tag.to_string(),
        })
    }

    /// Point expressed in the box frame.
    pub fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let l = self.to_local(p);
        (0..3).all(|k| l[k].abs() <= 0.5 * self.dimensions[k] + BOX_EPSILON)
    }
}

/// Point-set intersection over union.
pub fn set_iou(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    // both sorted
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxMatch {
    pub box_index: usize,
    pub points_in_box: usize,
    /// Best-matching cluster id, `None` when no cluster overlaps the box.
    pub cluster: Option<u32>,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IouSummary {
    pub matches: Vec<BoxMatch>,
    /// Boxes that contained no valid return and were skipped.
    pub skipped_boxes: usize,
    pub mean_iou: f64,
    /// Fraction of evaluated boxes with IoU ≥ 0.5.
    pub recall_at_half: f64,
}

/// Best point-set IoU per box between the box's returns and any cluster.
/// Every valid pixel of `img` is a candidate box member.
pub fn cluster_box_iou(
    img: &RangeImage,
    labeling: &ClusterLabeling,
    boxes: &[LabeledBox],
) -> Result<IouSummary> {
    if img.shape() != labeling.shape() {
        return Err(Error::ShapeMismatch {
            expected: img.shape(),
            found: labeling.shape(),
        });
    }
    let clusters = labeling.members();
    let labels = labeling.labels();
    let xyz = img.points();
    let depth = img.depths();

    let mut matches = Vec::new();
    let mut skipped = 0;
    for (bi, b) in boxes.iter().enumerate() {
        let inside: Vec<usize> = (0..depth.len())
            .filter(|&i| depth[i] > 0.0 && b.contains(xyz[i]))
            .collect();
        if inside.is_empty() {
            skipped += 1;
            continue;
        }
        // only clusters touching the box can have non-zero IoU
        let mut candidates: BTreeMap<u32, ()> = BTreeMap::new();
        for &i in &inside {
            if labels[i] > 0 {
                candidates.insert(labels[i], ());
            }
        }
        let mut best = (None, 0.0);
        for &id in candidates.keys() {
            let iou = set_iou(&inside, &clusters[&id]);
            if iou > best.1 {
                best = (Some(id), iou);
            }
        }
        matches.push(BoxMatch {
            box_index: bi,
            points_in_box: inside.len(),
            cluster: best.0,
            iou: best.1,
        });
    }
    let n = matches.len();
    let (mean_iou, recall_at_half) = if n == 0 {
        (0.0, 0.0)
    } else {
        (
            matches.iter().map(|m| m.iou).sum::<f64>() / n as f64,
            matches.iter().filter(|m| m.iou >= 0.5).count() as f64 / n as f64,
        )
    };
    Ok(IouSummary {
        matches,
        skipped_boxes: skipped,
        mean_iou,
        recall_at_half,
    })
}
