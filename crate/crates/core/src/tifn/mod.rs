//! Temporal detection fusion: attention from past crops, past positions and a
//! persistent global set modulates the feature pyramid, the candidate head is
//! re-run on each modulated pyramid, and the groups are merged by NMS.

mod attention;
mod crop;
mod fusion;
mod pool;
mod xcorr;

use std::collections::VecDeque;

pub use attention::{
    apply_attention, global_semantic_attention, hann, hanning_window_2d, local_localization_attention,
    local_semantic_attention, AttentionMap,
};
pub use crop::crop_feature;
pub use fusion::{fuse_and_nms, nms};
pub use pool::{promote_to_global, update_candidate_pool, CandidatePool, GlobalSet, PoolEntry, PoolEvent};
pub use xcorr::{xcorr, Grid};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::feature::{FeatureCrop, SpatialInfo};
use crate::geometry::{iou, Detection};
use crate::providers::{CandidateExtractor, FrameBundle};

/// Minimum overlap for a re-extracted candidate to inherit a class label.
const LABEL_IOU: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionSwitches {
    pub local_semantic: bool,
    pub local_localization: bool,
    pub global_semantic: bool,
}

impl AttentionSwitches {
    pub const ALL: Self = AttentionSwitches {
        local_semantic: true,
        local_localization: true,
        global_semantic: true,
    };
    pub const NONE: Self = AttentionSwitches {
        local_semantic: false,
        local_localization: false,
        global_semantic: false,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct TifnParams {
    pub tau: usize,
    pub hanning_threshold: f64,
    pub gamma: u32,
    pub pool_capacity: usize,
    pub global_capacity: usize,
    pub match_threshold: f64,
    pub nms_iou: f64,
    pub switches: AttentionSwitches,
    pub candidate_floor: f32,
}

impl TifnParams {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        TifnParams {
            tau: cfg.tau,
            hanning_threshold: cfg.hanning_threshold,
            gamma: cfg.promote_frequency,
            pool_capacity: cfg.pool_capacity,
            global_capacity: cfg.global_capacity,
            match_threshold: cfg.pool_match_threshold,
            nms_iou: cfg.nms_iou,
            switches: AttentionSwitches {
                local_semantic: cfg.attn_ls,
                local_localization: cfg.attn_ll,
                global_semantic: cfg.attn_gs,
            },
            candidate_floor: cfg.candidate_floor as f32,
        }
    }
}

/// Attention maps of one frame, per type and pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAttention {
    pub local_semantic: [AttentionMap; 3],
    pub local_localization: [AttentionMap; 3],
    pub global_semantic: [AttentionMap; 3],
}

impl FrameAttention {
    /// Level grids in type-major order (ls, ll, gs), for dumping.
    pub fn level_grids(&self) -> [[Vec<f32>; 3]; 3] {
        let g = |m: &[AttentionMap; 3]| [m[0].values().to_vec(), m[1].values().to_vec(), m[2].values().to_vec()];
        [g(&self.local_semantic), g(&self.local_localization), g(&self.global_semantic)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub detections: Vec<Detection>,
    /// Candidate groups from the ls-, ll- and gs-modulated pyramids.
    pub groups: [Vec<Detection>; 3],
    pub attention: FrameAttention,
}

#[derive(Debug, Clone)]
struct LevelState {
    crops: VecDeque<Vec<FeatureCrop>>,
    spats: VecDeque<Vec<SpatialInfo>>,
    pool: CandidatePool,
    global: GlobalSet,
}

/// Per-video fusion state. Feed frames in order; call [`Tifn::reset_shot`]
/// at every shot boundary.
#[derive(Debug, Clone)]
pub struct Tifn {
    params: TifnParams,
    extractor: CandidateExtractor,
    levels: [LevelState; 3],
    recent: VecDeque<Vec<Detection>>,
}

fn zeros_like(bundle: &FrameBundle) -> [AttentionMap; 3] {
    let z = |l: usize| AttentionMap::zeros(bundle.pyramid[l].height(), bundle.pyramid[l].width());
    [z(0), z(1), z(2)]
}

fn best_label(d: &Detection, pools: &[&[Detection]]) -> Option<u32> {
    for pool in pools {
        let best = pool
            .iter()
            .map(|c| (iou(&c.bbox, &d.bbox), c.class_id))
            .filter(|(o, _)| *o >= LABEL_IOU)
            .max_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((_, class_id)) = best {
            return Some(class_id);
        }
    }
    None
}

impl Tifn {
    pub fn new(params: TifnParams) -> Self {
        let level = || LevelState {
            crops: VecDeque::new(),
            spats: VecDeque::new(),
            pool: CandidatePool::new(params.pool_capacity),
            global: GlobalSet::new(params.global_capacity),
        };
        let extractor = CandidateExtractor {
            floor: params.candidate_floor,
            ..CandidateExtractor::default()
        };
        Tifn {
            levels: [level(), level(), level()],
            params,
            extractor,
            recent: VecDeque::new(),
        }
    }

    pub fn params(&self) -> &TifnParams {
        &self.params
    }

    pub fn global_set(&self, level: usize) -> &GlobalSet {
        &self.levels[level].global
    }

    pub fn candidate_pool(&self, level: usize) -> &CandidatePool {
        &self.levels[level].pool
    }

    /// Drop shot-local history and pools; the global sets persist.
    pub fn reset_shot(&mut self) {
        for l in &mut self.levels {
            l.crops.clear();
            l.spats.clear();
            l.pool.clear();
        }
        self.recent.clear();
    }

    /// Fuse one frame's detections and fold the result into the state.
    pub fn process(&mut self, bundle: &FrameBundle) -> Result<FusionOutput> {
        let sw = self.params.switches;
        let mut attention = FrameAttention {
            local_semantic: zeros_like(bundle),
            local_localization: zeros_like(bundle),
            global_semantic: zeros_like(bundle),
        };
        for (l, state) in self.levels.iter().enumerate() {
            let map = &bundle.pyramid[l];
            if sw.local_semantic {
                let hist: Vec<Vec<FeatureCrop>> = state.crops.iter().cloned().collect();
                attention.local_semantic[l] = local_semantic_attention(&hist, map)?;
            }
            if sw.local_localization {
                let hist: Vec<Vec<SpatialInfo>> = state.spats.iter().cloned().collect();
                attention.local_localization[l] =
                    local_localization_attention(&hist, map.height(), map.width(), self.params.hanning_threshold);
            }
            if sw.global_semantic {
                attention.global_semantic[l] = global_semantic_attention(&state.global, map)?;
            }
        }

        let base = &bundle.pyramid[0];
        let threshold = self.extractor.threshold(base);
        let recent: Vec<Detection> = self.recent.iter().flatten().copied().collect();
        let group = |enabled: bool, attn: &AttentionMap| -> Result<Vec<Detection>> {
            if !enabled {
                return Ok(bundle.candidates.clone());
            }
            let modulated = apply_attention(base, attn)?;
            let mut dets = self.extractor.extract(&modulated, base, threshold, bundle.frame_index);
            for d in &mut dets {
                if let Some(c) = best_label(d, &[&bundle.candidates, &recent]) {
                    d.class_id = c;
                }
            }
            Ok(dets)
        };
        let groups = [
            group(sw.local_semantic, &attention.local_semantic[0])?,
            group(sw.local_localization, &attention.local_localization[0])?,
            group(sw.global_semantic, &attention.global_semantic[0])?,
        ];
        let detections = fuse_and_nms([&groups[0], &groups[1], &groups[2]], self.params.nms_iou);
        self.absorb(bundle, &detections)?;
        Ok(FusionOutput {
            detections,
            groups,
            attention,
        })
    }

    fn absorb(&mut self, bundle: &FrameBundle, detections: &[Detection]) -> Result<()> {
        let p = &self.params;
        for (l, state) in self.levels.iter_mut().enumerate() {
            let crops: Vec<FeatureCrop> = detections
                .iter()
                .filter_map(|d| crop_feature(&bundle.pyramid[l], d, l).ok())
                .collect();
            state.spats.push_back(crops.iter().map(|c| c.spatial).collect());
            state.crops.push_back(crops.clone());
            while state.crops.len() > p.tau {
                state.crops.pop_front();
                state.spats.pop_front();
            }
            state.pool.update(crops, p.match_threshold);
            let pool = std::mem::replace(&mut state.pool, CandidatePool::new(0));
            let global = std::mem::replace(&mut state.global, GlobalSet::new(0));
            let (pool, global) = promote_to_global(pool, global, p.gamma);
            state.pool = pool;
            state.global = global;
        }
        self.recent.push_back(detections.to_vec());
        while self.recent.len() > p.tau {
            self.recent.pop_front();
        }
        Ok(())
    }
}

/// The unfused path: the base candidates after NMS.
pub fn bypass(bundle: &FrameBundle, nms_iou: f64) -> Vec<Detection> {
    fuse_and_nms([&bundle.candidates, &[], &[]], nms_iou)
}
