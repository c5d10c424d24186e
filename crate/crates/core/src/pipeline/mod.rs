//! End-to-end run over one video: shot split, per-shot fusion and tracking,
//! cross-shot linking and major-object selection.

mod manifest;

pub use manifest::{cached_majors, input_digest, replay, run_to_dir, RunManifest, OUTPUT_FILES};

use std::time::Instant;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::feature::FeatureCrop;
use crate::geometry::Detection;
use crate::providers::csv::{write_detections, write_tracks};
use crate::providers::{binfmt, DetectionRecord, FaceProvider, FrameBundle, TrackRecord};
use crate::reid::{link_tracklets, select_major_objects, trajectory_records, LinkOutcome, ReidParams, TrajectoryFeature};
use crate::tifn::{bypass, crop_feature, FrameAttention, Tifn, TifnParams};
use crate::tracker::{detect_shot_boundaries, Observation, ShotBoundaryList, Tracker, TrackerParams};
use crate::trajectory::{TrackState, Tracklet, TrackletEntry};

/// Wall-clock time per stage in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageTimings {
    pub fusion_ms: f64,
    pub tracking_ms: f64,
    pub reid_ms: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub shots: ShotBoundaryList,
    /// Detections handed to the tracker, per frame.
    pub fused: Vec<Vec<Detection>>,
    pub tracklets: Vec<Tracklet>,
    pub link: LinkOutcome,
    pub majors: Vec<TrajectoryFeature>,
    /// Attention maps per frame; only kept when intermediates are requested.
    pub attention: Vec<FrameAttention>,
    pub timings: StageTimings,
}

impl PipelineOutput {
    /// Per-shot track rows, ordered by frame then track id.
    pub fn track_records(&self) -> Vec<TrackRecord> {
        let mut rows: Vec<TrackRecord> = self
            .tracklets
            .iter()
            .flat_map(|t| {
                t.entries.iter().map(move |e| TrackRecord {
                    frame: e.frame_index,
                    track_id: t.track_id,
                    bbox: e.bbox,
                    confidence: e.confidence,
                    class_id: e.class_id,
                    shot_id: t.shot_id,
                })
            })
            .collect();
        rows.sort_by_key(|r| (r.frame, r.track_id));
        rows
    }

    pub fn tracks_csv(&self) -> String {
        write_tracks(&self.track_records())
    }

    pub fn trajectories_jsonl(&self) -> Result<String> {
        trajectory_records(&self.link.trajectories, &self.link.features)
    }

    pub fn majors_jsonl(&self) -> Result<String> {
        let ids: Vec<u32> = self.majors.iter().map(|m| m.object_id).collect();
        let (t, f): (Vec<_>, Vec<_>) = self
            .link
            .trajectories
            .iter()
            .zip(&self.link.features)
            .filter(|(t, _)| ids.contains(&t.object_id))
            .map(|(t, f)| (t.clone(), f.clone()))
            .unzip();
        trajectory_records(&t, &f)
    }

    pub fn detections_csv(&self) -> String {
        let rows: Vec<DetectionRecord> = self.fused.iter().flatten().map(DetectionRecord::from_detection).collect();
        write_detections(&rows)
    }

    pub fn shots_json(&self) -> String {
        let doc = serde_json::json!({
            "n_frames": self.shots.n_frames,
            "cuts": self.shots.cuts,
        });
        format!("{doc}\n")
    }

    /// Attention grids in the binary dump layout, or `None` if not kept.
    pub fn attention_dump(&self, h0: usize, w0: usize) -> Option<Vec<u8>> {
        if self.attention.is_empty() {
            return None;
        }
        let frames: Vec<[Vec<f32>; 3]> = self
            .attention
            .iter()
            .map(|a| {
                let g = a.level_grids();
                std::array::from_fn(|l| g.iter().flat_map(|per_type| per_type[l].iter().copied()).collect())
            })
            .collect();
        Some(binfmt::encode_attention_dump(h0, w0, &frames))
    }
}

fn observations(
    bundle: &FrameBundle,
    dets: &[Detection],
    levels: &[u8],
    faces: &dyn FaceProvider,
) -> Result<Vec<Observation>> {
    dets.iter()
        .map(|d| {
            let crops = levels
                .iter()
                .map(|&l| crop_feature(&bundle.pyramid[l as usize], d, l as usize))
                .collect::<Result<Vec<FeatureCrop>>>()?;
            let feature = crop_feature(&bundle.pyramid[0], d, 0)?.pooled();
            Ok(Observation {
                detection: *d,
                crops,
                feature,
                face: faces.face_features(bundle, &d.bbox),
            })
        })
        .collect()
}

fn check_frames(frames: &[FrameBundle]) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::Degenerate("video has no frames".into()));
    }
    for (i, f) in frames.iter().enumerate() {
        if f.frame_index != i as u32 {
            return Err(Error::Contract(format!("frame at position {i} has index {}", f.frame_index)).at_stage("load", i as u32));
        }
        f.validate().map_err(|e| e.at_stage("load", i as u32))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FusedVideo {
    pub shots: ShotBoundaryList,
    pub fused: Vec<Vec<Detection>>,
    pub attention: Vec<FrameAttention>,
}

/// Shot split and per-shot detection fusion (or the unfused path when
/// `cfg.fusion` is off).
pub fn fuse_video(frames: &[FrameBundle], cfg: &PipelineConfig, keep_attention: bool) -> Result<FusedVideo> {
    check_frames(frames)?;
    let hists: Vec<Vec<f32>> = frames.iter().map(|f| f.rgb_histogram.clone()).collect();
    let shots = detect_shot_boundaries(&hists, cfg.shot_hist_threshold);
    let mut tifn = Tifn::new(TifnParams::from_config(cfg));
    let mut fused = Vec::with_capacity(frames.len());
    let mut attention = Vec::new();
    for range in shots.shots() {
        tifn.reset_shot();
        for fi in range {
            let bundle = &frames[fi as usize];
            let dets = if cfg.fusion {
                let out = tifn.process(bundle).map_err(|e| e.at_stage("fuse", fi))?;
                if keep_attention {
                    attention.push(out.attention);
                }
                out.detections
            } else {
                bypass(bundle, cfg.nms_iou)
            };
            fused.push(dets);
        }
    }
    Ok(FusedVideo { shots, fused, attention })
}

/// Track each shot independently; track ids continue across shots.
pub fn track_video(
    frames: &[FrameBundle],
    shots: &ShotBoundaryList,
    fused: &[Vec<Detection>],
    faces: &dyn FaceProvider,
    cfg: &PipelineConfig,
) -> Result<Vec<Tracklet>> {
    check_frames(frames)?;
    if fused.len() != frames.len() || shots.n_frames as usize != frames.len() {
        return Err(Error::Contract("detections, shots and frames cover different lengths".into()));
    }
    let tparams = TrackerParams::from_config(cfg);
    let mut tracklets = Vec::new();
    let mut next_id = 0u32;
    for (shot_id, range) in shots.shots().into_iter().enumerate() {
        let mut tracker = Tracker::new(tparams.clone(), shot_id as u32, range.clone(), next_id);
        for fi in range {
            let bundle = &frames[fi as usize];
            let obs = observations(bundle, &fused[fi as usize], &cfg.cpsn_levels, faces).map_err(|e| e.at_stage("track", fi))?;
            tracker.step(fi, &obs).map_err(|e| e.at_stage("track", fi))?;
        }
        next_id = tracker.next_track_id();
        tracklets.extend(tracker.finish());
    }
    Ok(tracklets)
}

/// Rebuild tracklets from track rows, taking each entry's appearance from
/// the level-0 crop of its frame.
pub fn tracklets_from_records(
    records: &[TrackRecord],
    frames: &[FrameBundle],
    faces: &dyn FaceProvider,
) -> Result<Vec<Tracklet>> {
    let mut by_track: std::collections::BTreeMap<(u32, u32), Vec<&TrackRecord>> = Default::default();
    for r in records {
        by_track.entry((r.shot_id, r.track_id)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((shot_id, track_id), mut rows) in by_track {
        rows.sort_by_key(|r| r.frame);
        let entries = rows
            .iter()
            .map(|r| {
                let bundle = frames
                    .get(r.frame as usize)
                    .ok_or_else(|| Error::Contract(format!("track {track_id} refers to missing frame {}", r.frame)))?;
                let det = Detection::new(r.bbox, r.confidence, r.class_id, r.frame)?;
                Ok(TrackletEntry {
                    frame_index: r.frame,
                    bbox: r.bbox,
                    confidence: r.confidence,
                    class_id: r.class_id,
                    feature: crop_feature(&bundle.pyramid[0], &det, 0)?.pooled(),
                    face: faces.face_features(bundle, &r.bbox),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Tracklet {
            track_id,
            shot_id,
            entries,
            state: TrackState::Confirmed,
        });
    }
    Ok(out)
}

/// Cross-shot linking and major-object selection.
pub fn link_video(
    tracklets: Vec<Tracklet>,
    frames: &[FrameBundle],
    cfg: &PipelineConfig,
) -> Result<(LinkOutcome, Vec<TrajectoryFeature>)> {
    check_frames(frames)?;
    let (w, h) = frames[0].frame_size();
    let last = frames.len() as u32 - 1;
    let link = link_tracklets(tracklets, w * h, &ReidParams::from_config(cfg)).map_err(|e| e.at_stage("reid", last))?;
    let majors = select_major_objects(&link.features, frames.len() as u32, cfg.major_duration_frac, cfg.major_area_frac);
    Ok((link, majors))
}

/// Run every stage over `frames`, which must be indexed 0, 1, 2, ... in order.
pub fn run_pipeline(
    frames: &[FrameBundle],
    faces: &dyn FaceProvider,
    cfg: &PipelineConfig,
    keep_attention: bool,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut timings = StageTimings::default();
    let t = Instant::now();
    let FusedVideo { shots, fused, attention } = fuse_video(frames, cfg, keep_attention)?;
    timings.fusion_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let tracklets = track_video(frames, &shots, &fused, faces, cfg)?;
    timings.tracking_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let (link, majors) = link_video(tracklets.clone(), frames, cfg)?;
    timings.reid_ms = t.elapsed().as_secs_f64() * 1e3;
    log::info!(
        "{} frames, {} shots, {} tracklets, {} trajectories, {} majors ({:.0} / {:.0} / {:.0} ms)",
        frames.len(),
        shots.cuts.len() + 1,
        tracklets.len(),
        link.trajectories.len(),
        majors.len(),
        timings.fusion_ms,
        timings.tracking_ms,
        timings.reid_ms
    );

    Ok(PipelineOutput {
        shots,
        fused,
        tracklets,
        link,
        majors,
        attention,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{generate_scenario, NoFaces, ScenarioSpec};

    #[test]
    fn one_object_one_trajectory() {
        let spec = ScenarioSpec::random(1, 30, vec![], 8, 3);
        let (frames, _) = generate_scenario(&spec).unwrap();
        let out = run_pipeline(&frames, &NoFaces, &PipelineConfig::default(), false).unwrap();
        assert_eq!(out.link.trajectories.len(), 1);
        assert_eq!(out.majors.len(), 1);
    }

    #[test]
    fn fusion_off_matches_all_attentions_off() {
        let spec = ScenarioSpec::random(3, 16, vec![8], 8, 5).with_random_degradation(2, 4, 0.2);
        let (frames, _) = generate_scenario(&spec).unwrap();
        let off = PipelineConfig {
            fusion: false,
            ..PipelineConfig::default()
        };
        let none = PipelineConfig {
            attn_ls: false,
            attn_ll: false,
            attn_gs: false,
            ..PipelineConfig::default()
        };
        let a = run_pipeline(&frames, &NoFaces, &off, false).unwrap();
        let b = run_pipeline(&frames, &NoFaces, &none, false).unwrap();
        assert_eq!(a.fused, b.fused);
        assert_eq!(a.tracks_csv(), b.tracks_csv());
    }

    #[test]
    fn stage_errors_carry_frame() {
        let spec = ScenarioSpec::random(1, 4, vec![], 4, 3);
        let (mut frames, _) = generate_scenario(&spec).unwrap();
        frames[2].rgb_histogram.pop();
        let err = run_pipeline(&frames, &NoFaces, &PipelineConfig::default(), false).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "load", frame: 2, .. }));
    }
}
