//! Trajectory extraction and object re-identification for short videos.

pub mod config;
pub mod error;
pub mod eval;
pub mod feature;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod providers;
pub mod reid;
pub mod tifn;
pub mod tracker;
pub mod trajectory;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use feature::{cosine_similarity, l2_normalize_cells, FeatureCrop, FeatureMap, SpatialInfo};
pub use geometry::{iou, BoundingBox, Detection};
pub use providers::FrameBundle;
pub use trajectory::{TrackState, Tracklet, TrackletEntry, Trajectory};
