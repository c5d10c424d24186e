//! Tracking, detection and retrieval metrics.

mod ap;
mod mot;
mod rank;

pub use ap::{average_precision, detection_recall, gt_detections, ApReport};
pub use mot::{clear_mot, MotReport};
pub use rank::{rank_k, rank_k_scores, LabeledFeature};

pub const DEFAULT_IOU_MIN: f64 = 0.5;

pub(crate) fn check_iou_min(iou_min: f64) -> crate::error::Result<()> {
    if iou_min > 0.0 && iou_min < 1.0 {
        Ok(())
    } else {
        Err(crate::error::Error::Config(format!("iou_min must lie in (0, 1), got {iou_min}")))
    }
}
