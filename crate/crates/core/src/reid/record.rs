use serde::{Deserialize, Serialize};

use super::{Category, TrajectoryFeature};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_id: u32,
    pub frames: Vec<u32>,
    /// `[cx, cy, w, h]` per frame.
    pub boxes: Vec<[f32; 4]>,
}

/// One line of the trajectories file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub object_id: u32,
    pub category: Category,
    pub class_id: u32,
    pub shots: Vec<ShotRecord>,
    pub feature: Vec<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<Vec<f32>>,
    pub duration_frames: u32,
    pub mean_area_frac: f64,
}

impl TrajectoryRecord {
    pub fn new(traj: &Trajectory, feature: &TrajectoryFeature) -> Self {
        let mut shots: Vec<ShotRecord> = Vec::new();
        let mut tracklets: Vec<_> = traj.tracklets.iter().collect();
        tracklets.sort_by_key(|t| (t.shot_id, t.first_frame()));
        for t in tracklets {
            if shots.last().is_none_or(|s| s.shot_id != t.shot_id) {
                shots.push(ShotRecord {
                    shot_id: t.shot_id,
                    frames: Vec::new(),
                    boxes: Vec::new(),
                });
            }
            let s = shots.last_mut().expect("just pushed");
            for e in &t.entries {
                s.frames.push(e.frame_index);
                s.boxes.push([e.bbox.cx, e.bbox.cy, e.bbox.w, e.bbox.h]);
            }
        }
        TrajectoryRecord {
            object_id: traj.object_id,
            category: feature.category,
            class_id: feature.class_id,
            shots,
            feature: feature.feature.clone(),
            face: feature.face.clone(),
            duration_frames: feature.duration_frames,
            mean_area_frac: feature.mean_area_frac,
        }
    }

    pub fn to_feature(&self) -> TrajectoryFeature {
        TrajectoryFeature {
            object_id: self.object_id,
            feature: self.feature.clone(),
            face: self.face.clone(),
            category: self.category,
            class_id: self.class_id,
            duration_frames: self.duration_frames,
            mean_area_frac: self.mean_area_frac,
        }
    }
}

/// Serialize trajectories (with their aligned features) one JSON object per line.
pub fn trajectory_records(trajs: &[Trajectory], features: &[TrajectoryFeature]) -> Result<String> {
    if trajs.len() != features.len() {
        return Err(Error::Contract("trajectories and features differ in count".into()));
    }
    let mut out = String::new();
    for (t, f) in trajs.iter().zip(features) {
        let line = serde_json::to_string(&TrajectoryRecord::new(t, f))
            .map_err(|e| Error::Numerical(format!("cannot serialize trajectory {}: {e}", t.object_id)))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_trajectory_records(text: &str) -> Result<Vec<TrajectoryRecord>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let body = line.trim();
        if !body.is_empty() {
            let rec: TrajectoryRecord = serde_json::from_str(body)
                .map_err(|e| Error::format(offset, format!("bad trajectory record: {e}")))?;
            if rec.shots.iter().any(|s| s.frames.len() != s.boxes.len()) {
                return Err(Error::format(offset, "frames and boxes differ in length"));
            }
            out.push(rec);
        }
        offset += line.len() as u64;
    }
    Ok(out)
}
