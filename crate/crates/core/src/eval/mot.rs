use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::check_iou_min;
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::providers::{GroundTruth, TrackRecord};
use crate::tracker::{hungarian_assign, SENTINEL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotReport {
    pub mota: f64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub ids: u64,
    pub gt_total: u64,
}

impl MotReport {
    pub fn fp_frac(&self) -> f64 {
        self.fp as f64 / self.gt_total as f64
    }

    pub fn fn_frac(&self) -> f64 {
        self.fn_ as f64 / self.gt_total as f64
    }

    pub fn ids_frac(&self) -> f64 {
        self.ids as f64 / self.gt_total as f64
    }
}

/// CLEAR-MOT over visible ground truth. A ground-truth object keeps its
/// previous hypothesis when that hypothesis is still present and overlaps
/// enough; the rest are assigned by minimum total (1 - IoU).
pub fn clear_mot(gt: &GroundTruth, hyp: &[TrackRecord], iou_min: f64) -> Result<MotReport> {
    check_iou_min(iou_min)?;
    let mut gt_by_frame: BTreeMap<u32, Vec<(u32, BoundingBox)>> = BTreeMap::new();
    for r in gt.records.iter().filter(|r| r.visible) {
        gt_by_frame.entry(r.frame).or_default().push((r.object_id, r.bbox));
    }
    let gt_total: u64 = gt_by_frame.values().map(|v| v.len() as u64).sum();
    if gt_total == 0 {
        return Err(Error::Degenerate("no visible ground truth; MOTA is undefined".into()));
    }
    let mut hyp_by_frame: BTreeMap<u32, Vec<(u32, BoundingBox)>> = BTreeMap::new();
    for h in hyp {
        hyp_by_frame.entry(h.frame).or_default().push((h.track_id, h.bbox));
    }
    let frames: BTreeSet<u32> = gt_by_frame.keys().chain(hyp_by_frame.keys()).copied().collect();

    let mut last_match: HashMap<u32, u32> = HashMap::new();
    let (mut fp, mut fn_, mut ids) = (0u64, 0u64, 0u64);
    let empty = Vec::new();
    for f in frames {
        let g = gt_by_frame.get(&f).unwrap_or(&empty);
        let h = hyp_by_frame.get(&f).unwrap_or(&empty);
        let mut g_used = vec![false; g.len()];
        let mut h_used = vec![false; h.len()];
        let mut matched: Vec<(usize, usize)> = Vec::new();

        for (gi, (oid, gb)) in g.iter().enumerate() {
            let Some(prev) = last_match.get(oid) else { continue };
            if let Some(hi) = h.iter().position(|(tid, _)| tid == prev) {
                if !h_used[hi] && iou(gb, &h[hi].1) >= iou_min {
                    g_used[gi] = true;
                    h_used[hi] = true;
                    matched.push((gi, hi));
                }
            }
        }

        let gi_free: Vec<usize> = (0..g.len()).filter(|i| !g_used[*i]).collect();
        let hi_free: Vec<usize> = (0..h.len()).filter(|i| !h_used[*i]).collect();
        if !gi_free.is_empty() && !hi_free.is_empty() {
            let cost: Vec<Vec<f64>> = gi_free
                .iter()
                .map(|&gi| {
                    hi_free
                        .iter()
                        .map(|&hi| {
                            let o = iou(&g[gi].1, &h[hi].1);
                            if o >= iou_min {
                                1.0 - o
                            } else {
                                SENTINEL
                            }
                        })
                        .collect()
                })
                .collect();
            for (r, c) in hungarian_assign(&cost) {
                let (gi, hi) = (gi_free[r], hi_free[c]);
                g_used[gi] = true;
                h_used[hi] = true;
                matched.push((gi, hi));
            }
        }

        for (gi, hi) in matched {
            let (oid, tid) = (g[gi].0, h[hi].0);
            if let Some(prev) = last_match.insert(oid, tid) {
                if prev != tid {
                    ids += 1;
                }
            }
        }
        fn_ += g_used.iter().filter(|u| !**u).count() as u64;
        fp += h_used.iter().filter(|u| !**u).count() as u64;
    }
    Ok(MotReport {
        mota: 1.0 - (fp + fn_ + ids) as f64 / gt_total as f64,
        fp,
        fn_,
        ids,
        gt_total,
    })
}
