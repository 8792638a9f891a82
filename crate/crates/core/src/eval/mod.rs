//! Evaluation: cluster-vs-box IoU, relative pose error and RMSE.

mod iou;
mod trajectory;

pub use iou::{cluster_box_iou, set_iou, BoxMatch, IouSummary, LabeledBox, BOX_EPSILON};
pub use trajectory::{
    rmse, rpe, straight_line, transform_trajectory, RpeEntry, Trajectory, ORTHONORMAL_TOLERANCE,
};
