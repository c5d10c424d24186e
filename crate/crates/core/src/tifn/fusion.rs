use crate::geometry::{iou, Detection};

/// Class-wise greedy non-maximum suppression by descending confidence.
///
/// Ties in confidence keep input order. Output is in descending confidence.
pub fn nms(detections: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].confidence.total_cmp(&detections[a].confidence).then(a.cmp(&b)));
    let mut kept: Vec<Detection> = Vec::new();
    for i in order {
        let d = &detections[i];
        let suppressed = kept
            .iter()
            .any(|k| k.class_id == d.class_id && iou(&k.bbox, &d.bbox) > iou_threshold);
        if !suppressed {
            kept.push(*d);
        }
    }
    kept
}

/// Union of the candidate groups followed by class-wise NMS.
pub fn fuse_and_nms(groups: [&[Detection]; 3], iou_threshold: f64) -> Vec<Detection> {
    let all: Vec<Detection> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    nms(&all, iou_threshold)
}
