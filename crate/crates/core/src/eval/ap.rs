use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::check_iou_min;
use crate::error::{Error, Result};
use crate::geometry::{iou, Detection};
use crate::providers::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApReport {
    /// AP for every class with at least one ground-truth box.
    pub per_class: BTreeMap<u32, f64>,
    pub map: f64,
}

/// Visible ground-truth boxes as detections with confidence 1.
pub fn gt_detections(gt: &GroundTruth) -> Vec<Detection> {
    gt.records
        .iter()
        .filter(|r| r.visible)
        .map(|r| Detection {
            bbox: r.bbox,
            confidence: 1.0,
            class_id: r.class_id,
            frame_index: r.frame,
        })
        .collect()
}

/// For one class, mark each detection (in descending confidence) as a hit or
/// not. A detection takes the unclaimed ground truth it overlaps most.
fn match_class(gt: &[&Detection], dets: &[&Detection], iou_min: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|a, b| dets[*b].confidence.total_cmp(&dets[*a].confidence).then(a.cmp(b)));
    let mut claimed = vec![false; gt.len()];
    order
        .into_iter()
        .map(|di| {
            let d = dets[di];
            let best = gt
                .iter()
                .enumerate()
                .filter(|(gi, g)| !claimed[*gi] && g.frame_index == d.frame_index)
                .map(|(gi, g)| (gi, iou(&g.bbox, &d.bbox)))
                .filter(|(_, o)| *o >= iou_min)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((gi, _)) => {
                    claimed[gi] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

/// Area under the all-point interpolated precision/recall curve.
fn all_point_ap(hits: &[bool], n_gt: usize) -> f64 {
    let mut tp = 0usize;
    let mut recall = Vec::with_capacity(hits.len());
    let mut precision = Vec::with_capacity(hits.len());
    for (i, h) in hits.iter().enumerate() {
        tp += *h as usize;
        recall.push(tp as f64 / n_gt as f64);
        precision.push(tp as f64 / (i + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_r = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_r) * p;
        prev_r = *r;
    }
    ap
}

pub fn average_precision(gt: &[Detection], dets: &[Detection], iou_min: f64) -> Result<ApReport> {
    check_iou_min(iou_min)?;
    let classes: BTreeSet<u32> = gt.iter().map(|g| g.class_id).collect();
    if classes.is_empty() {
        return Err(Error::Degenerate("no ground truth; mAP is undefined".into()));
    }
    let mut per_class = BTreeMap::new();
    for c in classes {
        let g: Vec<&Detection> = gt.iter().filter(|d| d.class_id == c).collect();
        let d: Vec<&Detection> = dets.iter().filter(|d| d.class_id == c).collect();
        per_class.insert(c, all_point_ap(&match_class(&g, &d, iou_min), g.len()));
    }
    let map = per_class.values().sum::<f64>() / per_class.len() as f64;
    Ok(ApReport { per_class, map })
}

/// Fraction of ground-truth boxes covered by some same-class detection,
/// with one-to-one matching in descending confidence.
pub fn detection_recall(gt: &[Detection], dets: &[Detection], iou_min: f64) -> Result<f64> {
    check_iou_min(iou_min)?;
    if gt.is_empty() {
        return Err(Error::Degenerate("no ground truth; recall is undefined".into()));
    }
    let classes: BTreeSet<u32> = gt.iter().map(|g| g.class_id).collect();
    let mut hits = 0usize;
    for c in classes {
        let g: Vec<&Detection> = gt.iter().filter(|d| d.class_id == c).collect();
        let d: Vec<&Detection> = dets.iter().filter(|d| d.class_id == c).collect();
        hits += match_class(&g, &d, iou_min).iter().filter(|h| **h).count();
    }
    Ok(hits as f64 / gt.len() as f64)
}
