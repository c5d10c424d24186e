use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use svreid_core::eval::{
    average_precision, clear_mot, gt_detections, rank_k, LabeledFeature, DEFAULT_IOU_MIN,
};
use svreid_core::feature::cosine_similarity;
use svreid_core::io::{read_text, write_atomic};
use svreid_core::pipeline::{
    cached_majors, fuse_video, link_video, replay, run_to_dir, track_video, tracklets_from_records, PipelineOutput,
    StageTimings,
};
use svreid_core::providers::csv::{parse_detections, parse_tracks, write_detections, write_tracks};
use svreid_core::providers::{
    generate_scenario, load_frames, save_frames, DetectionRecord, GroundTruth, NoFaces, ScenarioSpec, TrackRecord,
};
use svreid_core::reid::{rank_gallery, ReidParams, NO_MATCH_SCORE};
use svreid_core::tracker::detect_shot_boundaries;
use svreid_core::{Detection, Error, PipelineConfig, Result};

use crate::{GlobalArgs, Switch};

fn load_config(g: &GlobalArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(p) = &g.config {
        cfg.apply_text(&read_text(p)?)?;
    }
    for o in &g.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.override_key(k.trim(), v.trim())?;
    }
    if let Some(f) = g.fusion {
        cfg.fusion = f == Switch::On;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

fn load_gt(p: &Path) -> Result<GroundTruth> {
    GroundTruth::from_records(&parse_detections(&read_text(p)?)?)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Objects, one per horizontal lane
    #[arg(long, default_value_t = 3)]
    objects: usize,
    #[arg(long, default_value_t = 100)]
    frames: u32,
    /// First frame of each new shot, comma separated
    #[arg(long, value_delimiter = ',')]
    cuts: Vec<u32>,
    /// Appearance channels
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Appearance rotation per frame, radians
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    /// Degradation windows per object as COUNT,LENGTH,GAIN
    #[arg(long, value_delimiter = ',', value_name = "COUNT,LENGTH,GAIN")]
    degrade: Vec<f64>,
    /// Frames file to write
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth CSV to write
    #[arg(long)]
    gt: PathBuf,
}

pub fn simulate(g: &GlobalArgs, a: &SimulateArgs) -> Result<()> {
    let mut spec = ScenarioSpec::random(a.objects, a.frames, a.cuts.clone(), a.dim, g.seed);
    spec.drift_rate = a.drift;
    match a.degrade[..] {
        [] => {}
        [count, length, gain] => spec = spec.with_random_degradation(count as usize, length as u32, gain as f32),
        _ => return Err(Error::Config("--degrade takes COUNT,LENGTH,GAIN".into())),
    }
    let (frames, gt) = generate_scenario(&spec)?;
    save_frames(&a.out, &frames)?;
    write_atomic(&a.gt, write_detections(&gt.to_records()).as_bytes())?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Detections CSV to write
    #[arg(long)]
    out: PathBuf,
}

pub fn fuse(g: &GlobalArgs, a: &FuseArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let frames = load_frames(&a.input)?;
    let fused = fuse_video(&frames, &cfg, g.dump_intermediates)?;
    let rows: Vec<DetectionRecord> = fused.fused.iter().flatten().map(DetectionRecord::from_detection).collect();
    write_atomic(&a.out, write_detections(&rows).as_bytes())
}

#[derive(Args, Debug)]
pub struct TrackArgs {
    #[arg(long)]
    input: PathBuf,
    /// Detections CSV (as written by `fuse`)
    #[arg(long)]
    detections: PathBuf,
    /// Tracks CSV to write
    #[arg(long)]
    out: PathBuf,
}

fn detections_per_frame(records: &[DetectionRecord], n: usize) -> Result<Vec<Vec<Detection>>> {
    let mut per = vec![Vec::new(); n];
    for r in records {
        let slot = per
            .get_mut(r.frame as usize)
            .ok_or_else(|| Error::Contract(format!("detection in frame {} beyond the video", r.frame)))?;
        slot.push(r.to_detection()?);
    }
    Ok(per)
}

pub fn track(g: &GlobalArgs, a: &TrackArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let frames = load_frames(&a.input)?;
    let dets = detections_per_frame(&parse_detections(&read_text(&a.detections)?)?, frames.len())?;
    let hists: Vec<Vec<f32>> = frames.iter().map(|f| f.rgb_histogram.clone()).collect();
    let shots = detect_shot_boundaries(&hists, cfg.shot_hist_threshold);
    let tracklets = track_video(&frames, &shots, &dets, &NoFaces, &cfg)?;
    let mut rows: Vec<TrackRecord> = tracklets
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
    write_atomic(&a.out, write_tracks(&rows).as_bytes())
}

#[derive(Args, Debug)]
pub struct ReidArgs {
    #[arg(long)]
    input: PathBuf,
    /// Tracks CSV (as written by `track`)
    #[arg(long)]
    tracks: PathBuf,
    /// Trajectories file to write (one JSON object per line)
    #[arg(long)]
    out: PathBuf,
    /// Major objects file to write
    #[arg(long)]
    majors: Option<PathBuf>,
}

pub fn reid(g: &GlobalArgs, a: &ReidArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let frames = load_frames(&a.input)?;
    let tracklets = tracklets_from_records(&parse_tracks(&read_text(&a.tracks)?)?, &frames, &NoFaces)?;
    let (link, majors) = link_video(tracklets.clone(), &frames, &cfg)?;
    let out = PipelineOutput {
        shots: detect_shot_boundaries(
            &frames.iter().map(|f| f.rgb_histogram.clone()).collect::<Vec<_>>(),
            cfg.shot_hist_threshold,
        ),
        fused: Vec::new(),
        tracklets,
        link,
        majors,
        attention: Vec::new(),
        timings: StageTimings::default(),
    };
    write_atomic(&a.out, out.trajectories_jsonl()?.as_bytes())?;
    if let Some(m) = &a.majors {
        write_atomic(m, out.majors_jsonl()?.as_bytes())?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RetrieveArgs {
    /// Query frames file, repeatable
    #[arg(long, required = true)]
    query: Vec<PathBuf>,
    /// Directory of gallery frames files (`*.svfb`)
    #[arg(long)]
    gallery: PathBuf,
    /// Ranked CSV to write
    #[arg(long)]
    out: PathBuf,
    /// Where per-video runs are cached; defaults to `<gallery>/.svreid-cache`
    #[arg(long)]
    cache: Option<PathBuf>,
}

fn gallery_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "svfb"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("gallery {} has no .svfb files", dir.display())));
    }
    Ok(files)
}

fn video_name(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn retrieve(g: &GlobalArgs, a: &RetrieveArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let files = gallery_files(&a.gallery)?;
    let cache = a.cache.clone().unwrap_or_else(|| a.gallery.join(".svreid-cache"));
    let workers = pool(g.jobs)?;
    let all: Vec<&PathBuf> = a.query.iter().chain(&files).collect();
    let majors = workers.install(|| {
        all.par_iter()
            .map(|p| cached_majors(p, &cfg, &cache))
            .collect::<Result<Vec<_>>>()
    })?;
    let (q_majors, g_majors) = majors.split_at(a.query.len());
    let params = ReidParams::from_config(&cfg);
    let mut csv = String::from("query_video,rank,gallery_video,score,match\n");
    for (q, qm) in a.query.iter().zip(q_majors) {
        if qm.is_empty() {
            log::warn!("{}: no major objects, every gallery video scores {NO_MATCH_SCORE}", q.display());
        }
        for (rank, hit) in rank_gallery(qm, g_majors, &params).iter().enumerate() {
            let flag = if hit.score >= cfg.query_match_threshold { "match" } else { "no-match" };
            let _ = writeln!(
                csv,
                "{},{},{},{:.6},{flag}",
                video_name(q),
                rank + 1,
                video_name(&files[hit.video]),
                hit.score
            );
        }
    }
    write_atomic(&a.out, csv.as_bytes())
}

#[derive(Args, Debug)]
pub struct EvalMotArgs {
    /// Ground-truth CSV
    #[arg(long)]
    gt: PathBuf,
    /// Tracks CSV
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_MIN)]
    iou_min: f64,
    /// Also write the report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn eval_mot(_g: &GlobalArgs, a: &EvalMotArgs) -> Result<()> {
    let gt = load_gt(&a.gt)?;
    let hyp = parse_tracks(&read_text(&a.tracks)?)?;
    let r = clear_mot(&gt, &hyp, a.iou_min)?;
    println!(
        "MOTA {:.4}  FP {} ({:.4})  FN {} ({:.4})  IDS {} ({:.4})  GT {}",
        r.mota,
        r.fp,
        r.fp_frac(),
        r.fn_,
        r.fn_frac(),
        r.ids,
        r.ids_frac(),
        r.gt_total
    );
    if let Some(p) = &a.json {
        write_json(p, &r)?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(p: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(e.to_string()))?;
    s.push('\n');
    write_atomic(p, s.as_bytes())
}

#[derive(Args, Debug)]
pub struct EvalMapArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Detections CSV
    #[arg(long)]
    detections: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_MIN)]
    iou_min: f64,
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn eval_map(_g: &GlobalArgs, a: &EvalMapArgs) -> Result<()> {
    let gt = gt_detections(&load_gt(&a.gt)?);
    let dets = parse_detections(&read_text(&a.detections)?)?
        .iter()
        .map(|r| r.to_detection())
        .collect::<Result<Vec<_>>>()?;
    let r = average_precision(&gt, &dets, a.iou_min)?;
    for (c, ap) in &r.per_class {
        println!("class {c}: AP {ap:.4}");
    }
    println!("mAP {:.4}", r.map);
    if let Some(p) = &a.json {
        write_json(p, &r)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalRankArgs {
    /// Labeled features CSV: `item,label,feature` with space-separated values
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    gallery: PathBuf,
    /// Ranks to report, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    k: Vec<usize>,
}

fn parse_labeled(text: &str) -> Result<Vec<LabeledFeature>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let body = line.trim();
        let bad = |m: &str| Error::Format {
            offset,
            message: format!("line {}: {m}", i + 1),
        };
        if i == 0 {
            if body != "item,label,feature" {
                return Err(bad("expected header `item,label,feature`"));
            }
        } else if !body.is_empty() {
            let f: Vec<&str> = body.split(',').collect();
            if f.len() != 3 {
                return Err(bad("expected 3 fields"));
            }
            out.push(LabeledFeature {
                item: f[0].trim().parse().map_err(|_| bad("bad item"))?,
                label: f[1].trim().parse().map_err(|_| bad("bad label"))?,
                feature: f[2]
                    .split_whitespace()
                    .map(|v| v.parse::<f32>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad feature value"))?,
            });
        }
        offset += line.len() as u64;
    }
    Ok(out)
}

pub fn eval_rank(_g: &GlobalArgs, a: &EvalRankArgs) -> Result<()> {
    let q = parse_labeled(&read_text(&a.query)?)?;
    let gal = parse_labeled(&read_text(&a.gallery)?)?;
    let sim = |x: &[f32], y: &[f32]| cosine_similarity(x, y).unwrap_or(f64::NEG_INFINITY);
    for k in &a.k {
        println!("Rank-{k} {:.4}", rank_k(&q, &gal, *k, sim)?);
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Frames file, repeatable; each video writes into `<out>/<stem>` when several are given
    #[arg(long, conflicts_with = "replay")]
    input: Vec<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Repeat the run recorded in a manifest
    #[arg(long)]
    replay: Option<PathBuf>,
}

pub fn pipeline(g: &GlobalArgs, a: &PipelineArgs) -> Result<()> {
    if let Some(m) = &a.replay {
        replay(m, &a.out)?;
        return Ok(());
    }
    if a.input.is_empty() {
        return Err(Error::Config("pipeline needs --input or --replay".into()));
    }
    let cfg = load_config(g)?;
    let single = a.input.len() == 1;
    let workers = pool(g.jobs)?;
    let runs = workers.install(|| {
        a.input
            .par_iter()
            .map(|p| {
                let dir = if single { a.out.clone() } else { a.out.join(video_name(p)) };
                run_to_dir(p, &cfg, &dir, g.dump_intermediates, Some(g.seed)).map(|(_, o)| (p, o))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for (p, o) in runs {
        println!(
            "{}: {} shots, {} trajectories, {} major",
            video_name(p),
            o.shots.cuts.len() + 1,
            o.link.trajectories.len(),
            o.majors.len()
        );
    }
    Ok(())
}
