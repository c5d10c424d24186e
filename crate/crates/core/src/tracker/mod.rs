//! Per-shot multi-object tracking: pointwise multi-scale appearance
//! affinity, constant-velocity motion, gated Hungarian association and the
//! tentative / confirmed / deleted lifecycle.

mod cpsn;
mod hungarian;
mod kalman;
mod shot;

use std::collections::VecDeque;
use std::ops::Range;

pub use cpsn::{auto_k, cpsn_similarity, pointwise_response, project_channels, topk_mean, ResponseMap, ScaleCells};
pub use hungarian::{hungarian_assign, SENTINEL};
pub use kalman::{
    gating_distance, kalman_predict, kalman_update, measurement, squared_mahalanobis, KalmanState, Matrix4, Matrix8,
    Vector4, Vector8, STD_WEIGHT_POSITION, STD_WEIGHT_VELOCITY,
};
pub use shot::{detect_shot_boundaries, histogram_l1, ShotBoundaryList};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::feature::FeatureCrop;
use crate::geometry::Detection;
use crate::trajectory::{TrackState, Tracklet, TrackletEntry};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerParams {
    pub gate_threshold: f64,
    pub max_age: u32,
    pub n_init: u32,
    pub topk: usize,
    pub gallery_budget: usize,
    pub max_appearance_cost: f64,
}

impl TrackerParams {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        TrackerParams {
            gate_threshold: cfg.gate_threshold,
            max_age: cfg.max_age,
            n_init: cfg.n_init,
            topk: cfg.topk,
            gallery_budget: cfg.gallery_budget,
            max_appearance_cost: cfg.max_appearance_cost,
        }
    }
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams::from_config(&PipelineConfig::default())
    }
}

/// One detection handed to the tracker with its multi-scale crops and the
/// appearance vector recorded in the tracklet.
#[derive(Debug, Clone)]
pub struct Observation {
    pub detection: Detection,
    pub crops: Vec<FeatureCrop>,
    pub feature: Vec<f32>,
    pub face: Option<Vec<f32>>,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub track_id: u32,
    pub kalman: KalmanState,
    gallery: VecDeque<ScaleCells>,
    pub hits: u32,
    pub age_since_update: u32,
    pub state: TrackState,
    pub class_id: u32,
    was_confirmed: bool,
    entries: Vec<TrackletEntry>,
}

impl Track {
    pub fn gallery_len(&self) -> usize {
        self.gallery.len()
    }

    pub fn entries(&self) -> &[TrackletEntry] {
        &self.entries
    }

    fn appearance_similarity(&self, obs: &ScaleCells, k: usize) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for g in &self.gallery {
            best = best.max(obs.similarity(g, k)?);
        }
        Ok(best)
    }

    fn push_gallery(&mut self, cells: ScaleCells, budget: usize) {
        self.gallery.push_back(cells);
        while self.gallery.len() > budget.max(1) {
            self.gallery.pop_front();
        }
    }

    fn record(&mut self, obs: &Observation) {
        let d = &obs.detection;
        self.entries.push(TrackletEntry {
            frame_index: d.frame_index,
            bbox: d.bbox,
            confidence: d.confidence,
            class_id: d.class_id,
            feature: obs.feature.clone(),
            face: obs.face.clone(),
        });
    }

    fn into_tracklet(self, shot_id: u32) -> Option<Tracklet> {
        self.was_confirmed.then_some(Tracklet {
            track_id: self.track_id,
            shot_id,
            entries: self.entries,
            state: self.state,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub track_id: u32,
    pub detection_index: usize,
}

/// Tracker over the frames of one shot.
#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackerParams,
    shot_id: u32,
    frames: Range<u32>,
    next_id: u32,
    last_frame: Option<u32>,
    tracks: Vec<Track>,
    finished: Vec<Track>,
}

impl Tracker {
    /// `first_track_id` lets ids continue across the shots of a video.
    pub fn new(params: TrackerParams, shot_id: u32, frames: Range<u32>, first_track_id: u32) -> Self {
        Tracker {
            params,
            shot_id,
            frames,
            next_id: first_track_id,
            last_frame: None,
            tracks: Vec::new(),
            finished: Vec::new(),
        }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn next_track_id(&self) -> u32 {
        self.next_id
    }

    fn cost_matrix(&self, obs: &[ScaleCells], observations: &[Observation]) -> Result<Vec<Vec<f64>>> {
        let p = &self.params;
        let mut cost = vec![vec![SENTINEL; observations.len()]; self.tracks.len()];
        for (i, track) in self.tracks.iter().enumerate() {
            for (j, o) in observations.iter().enumerate() {
                if o.detection.class_id != track.class_id {
                    continue;
                }
                // motion gate first: appearance never overrides it
                if gating_distance(&track.kalman, &o.detection.bbox)? > p.gate_threshold {
                    continue;
                }
                let c = 1.0 - track.appearance_similarity(&obs[j], p.topk)?;
                if c <= p.max_appearance_cost {
                    cost[i][j] = c;
                }
            }
        }
        Ok(cost)
    }

    /// Associate one frame's observations, all from this tracker's shot.
    pub fn step(&mut self, frame_index: u32, observations: &[Observation]) -> Result<Vec<Assignment>> {
        if !self.frames.contains(&frame_index) {
            return Err(Error::Contract(format!(
                "frame {frame_index} is outside shot {} ({:?})",
                self.shot_id, self.frames
            )));
        }
        if self.last_frame.is_some_and(|f| frame_index <= f) {
            return Err(Error::Contract(format!("frame {frame_index} is not after the previous frame")));
        }
        if let Some(o) = observations.iter().find(|o| o.detection.frame_index != frame_index) {
            return Err(Error::Contract(format!(
                "detection from frame {} passed at frame {frame_index}",
                o.detection.frame_index
            )));
        }
        self.last_frame = Some(frame_index);
        let p = self.params.clone();

        for t in &mut self.tracks {
            t.kalman = kalman_predict(&t.kalman)?;
        }
        let cells = observations
            .iter()
            .map(|o| ScaleCells::from_crops(&o.crops))
            .collect::<Result<Vec<_>>>()?;
        let cost = self.cost_matrix(&cells, observations)?;
        let pairs = hungarian_assign(&cost);

        let mut det_used = vec![false; observations.len()];
        let mut track_hit = vec![false; self.tracks.len()];
        let mut out = Vec::with_capacity(pairs.len());
        for &(ti, di) in &pairs {
            let (t, o) = (&mut self.tracks[ti], &observations[di]);
            t.kalman = kalman_update(&t.kalman, &o.detection.bbox)?;
            t.push_gallery(cells[di].clone(), p.gallery_budget);
            t.hits += 1;
            t.age_since_update = 0;
            t.record(o);
            if t.state == TrackState::Tentative && t.hits >= p.n_init {
                t.state = TrackState::Confirmed;
                t.was_confirmed = true;
            }
            det_used[di] = true;
            track_hit[ti] = true;
            out.push(Assignment {
                track_id: t.track_id,
                detection_index: di,
            });
        }
        for (t, hit) in self.tracks.iter_mut().zip(&track_hit) {
            if *hit {
                continue;
            }
            t.age_since_update += 1;
            if t.state == TrackState::Tentative || t.age_since_update > p.max_age {
                t.state = TrackState::Deleted;
            }
        }
        let (alive, dead): (Vec<Track>, Vec<Track>) =
            std::mem::take(&mut self.tracks).into_iter().partition(|t| t.state != TrackState::Deleted);
        self.tracks = alive;
        self.finished.extend(dead);

        for (di, o) in observations.iter().enumerate() {
            if det_used[di] {
                continue;
            }
            let mut t = Track {
                track_id: self.next_id,
                kalman: KalmanState::initiate(&o.detection.bbox),
                gallery: VecDeque::new(),
                hits: 1,
                age_since_update: 0,
                state: TrackState::Tentative,
                class_id: o.detection.class_id,
                was_confirmed: false,
                entries: Vec::new(),
            };
            if p.n_init <= 1 {
                t.state = TrackState::Confirmed;
                t.was_confirmed = true;
            }
            t.push_gallery(cells[di].clone(), p.gallery_budget);
            t.record(o);
            self.next_id += 1;
            out.push(Assignment {
                track_id: t.track_id,
                detection_index: di,
            });
            self.tracks.push(t);
        }
        Ok(out)
    }

    /// Tracklets of every track that was ever confirmed, ordered by id.
    pub fn finish(self) -> Vec<Tracklet> {
        let shot = self.shot_id;
        let mut all: Vec<Tracklet> = self
            .finished
            .into_iter()
            .chain(self.tracks)
            .filter_map(|t| t.into_tracklet(shot))
            .collect();
        all.sort_by_key(|t| t.track_id);
        all
    }
}
