//! Cross-shot grouping of tracklets into trajectories, query-set updating,
//! major-object selection and cross-video retrieval.

mod link;
mod query;
mod record;
mod retrieval;

pub use link::{link_tracklets, LinkOutcome};
pub use query::{update_query_set, Identity, QuerySet, QueryUpdate};
pub use record::{parse_trajectory_records, trajectory_records, ShotRecord, TrajectoryRecord};
pub use query::BankEntry;
pub use retrieval::{rank_gallery, retrieve_videos, RetrievalHit, NO_MATCH_SCORE};

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::feature::{cosine_similarity, normalized};
use crate::trajectory::{majority_class, Tracklet, TrackletEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Person,
    Nonperson,
}

/// Similarity settings shared by linking and retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct ReidParams {
    pub sample_stride: usize,
    pub link_threshold: f64,
    pub query_match_threshold: f64,
    pub query_update_delta: f64,
    pub reid_weight: f64,
    pub face_weight: f64,
    pub person_classes: Vec<u32>,
    pub query_update: bool,
}

impl ReidParams {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        ReidParams {
            sample_stride: cfg.sample_stride,
            link_threshold: cfg.link_threshold,
            query_match_threshold: cfg.query_match_threshold,
            query_update_delta: cfg.query_update_delta,
            reid_weight: cfg.reid_weight,
            face_weight: cfg.face_weight,
            person_classes: cfg.person_classes.clone(),
            query_update: true,
        }
    }

    pub fn category(&self, class_id: u32) -> Category {
        if self.person_classes.contains(&class_id) {
            Category::Person
        } else {
            Category::Nonperson
        }
    }
}

impl Default for ReidParams {
    fn default() -> Self {
        ReidParams::from_config(&PipelineConfig::default())
    }
}

/// Summary of one trajectory (or tracklet) used for matching.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFeature {
    pub object_id: u32,
    /// Unit-norm mean of sampled entry features.
    pub feature: Vec<f32>,
    /// Unit-norm mean of the sampled entries' face embeddings, if any had one.
    pub face: Option<Vec<f32>>,
    pub category: Category,
    pub class_id: u32,
    pub duration_frames: u32,
    pub mean_area_frac: f64,
}

fn mean_unit(vectors: &[&[f32]]) -> Result<Vec<f32>> {
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Dimension("entry features differ in length".into()));
    }
    let mut acc = vec![0f64; dim];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += *x as f64;
        }
    }
    let mean: Vec<f32> = acc.iter().map(|a| (a / vectors.len() as f64) as f32).collect();
    normalized(&mean)
}

/// Average the entry features sampled every `sample_stride` entries (in
/// frame order, starting with the first) and normalize.
pub fn trajectory_feature(
    object_id: u32,
    entries: &[&TrackletEntry],
    sample_stride: usize,
    frame_area: f64,
    params: &ReidParams,
) -> Result<TrajectoryFeature> {
    let all = entries;
    if all.is_empty() {
        return Err(Error::Degenerate(format!("trajectory {object_id} has no entries")));
    }
    if sample_stride == 0 {
        return Err(Error::Config("sample_stride must be at least 1".into()));
    }
    let sampled: Vec<_> = all.iter().step_by(sample_stride).collect();
    let feats: Vec<&[f32]> = sampled.iter().map(|e| e.feature.as_slice()).collect();
    let feature = mean_unit(&feats)?;
    let faces: Vec<&[f32]> = sampled.iter().filter_map(|e| e.face.as_deref()).collect();
    let face = if faces.is_empty() { None } else { mean_unit(&faces).ok() };
    let frames: std::collections::BTreeSet<u32> = all.iter().map(|e| e.frame_index).collect();
    let mean_area = all.iter().map(|e| e.bbox.area()).sum::<f64>() / all.len() as f64;
    let class_id = majority_class(all.iter().map(|e| e.class_id));
    Ok(TrajectoryFeature {
        object_id,
        feature,
        face,
        category: params.category(class_id),
        class_id,
        duration_frames: frames.len() as u32,
        mean_area_frac: (mean_area / frame_area).min(1.0),
    })
}

pub fn tracklet_feature(t: &Tracklet, frame_area: f64, params: &ReidParams) -> Result<TrajectoryFeature> {
    let entries: Vec<&TrackletEntry> = t.entries.iter().collect();
    trajectory_feature(t.track_id, &entries, params.sample_stride, frame_area, params)
}

/// Weighted re-id and face score when a face is available, else re-id alone.
pub fn person_similarity(reid_sim: f64, face_sim: Option<f64>, lambda_reid: f64, lambda_face: f64) -> f64 {
    match face_sim {
        Some(f) => lambda_reid * reid_sim + lambda_face * f,
        None => reid_sim,
    }
}

pub fn nonperson_similarity(a: &TrajectoryFeature, b: &TrajectoryFeature) -> Result<f64> {
    if a.category != b.category {
        return Err(Error::Contract(format!(
            "cannot compare {:?} with {:?}",
            a.category, b.category
        )));
    }
    Ok(cosine_similarity(&a.feature, &b.feature).unwrap_or(0.0))
}

fn face_similarity(a: &TrajectoryFeature, b: &TrajectoryFeature) -> Option<f64> {
    match (&a.face, &b.face) {
        (Some(x), Some(y)) => cosine_similarity(x, y).ok(),
        _ => None,
    }
}

/// Category-appropriate similarity; `None` across categories.
pub fn feature_similarity(a: &TrajectoryFeature, b: &TrajectoryFeature, params: &ReidParams) -> Option<f64> {
    if a.category != b.category {
        return None;
    }
    let reid = cosine_similarity(&a.feature, &b.feature).unwrap_or(0.0);
    Some(match a.category {
        Category::Person => person_similarity(reid, face_similarity(a, b), params.reid_weight, params.face_weight),
        Category::Nonperson => reid,
    })
}

/// Trajectories lasting at least `duration_frac` of the video and covering at
/// least `area_frac` of the frame on average; if none qualify, the single
/// best by normalized duration times normalized area.
pub fn select_major_objects(
    trajs: &[TrajectoryFeature],
    video_length: u32,
    duration_frac: f64,
    area_frac: f64,
) -> Vec<TrajectoryFeature> {
    if trajs.is_empty() {
        return Vec::new();
    }
    let picked: Vec<TrajectoryFeature> = trajs
        .iter()
        .filter(|t| t.duration_frames as f64 >= duration_frac * video_length as f64 && t.mean_area_frac >= area_frac)
        .cloned()
        .collect();
    if !picked.is_empty() {
        return picked;
    }
    let max_d = trajs.iter().map(|t| t.duration_frames).max().unwrap_or(1).max(1) as f64;
    let max_a = trajs.iter().map(|t| t.mean_area_frac).fold(0.0, f64::max);
    let score = |t: &TrajectoryFeature| {
        let a = if max_a > 0.0 { t.mean_area_frac / max_a } else { 0.0 };
        t.duration_frames as f64 / max_d * a
    };
    let mut best = 0;
    for (i, t) in trajs.iter().enumerate() {
        if score(t) > score(&trajs[best]) {
            best = i;
        }
    }
    vec![trajs[best].clone()]
}
