//! Ambient-aware LiDAR point-cloud filtering.
//!
//! A frame is projected onto a range image, ground is removed, and two
//! clusterers label the rest: depth clustering (angle criterion, 4-neighbours)
//! and adaptive Euclidean clustering (depth-scaled distance, window
//! neighbours). Returns that land in large clusters of both form the ambient
//! skeleton. Normals sampled on the skeleton measure how degenerate the scene
//! is, and that measure picks the depth-clustering threshold for a final
//! cleaning pass. See [`pipeline::process_frame`].

pub mod cloud;
pub mod clustering;
pub mod config;
pub mod degeneration;
pub mod error;
pub mod eval;
pub mod ground;
pub mod io;
pub mod pipeline;
pub mod range_image;
pub mod sensor;
pub mod skeleton;
pub mod synthetic;

pub use cloud::{Point, PointCloud};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use range_image::{PixelCoord, RangeImage};
pub use sensor::SensorModel;
