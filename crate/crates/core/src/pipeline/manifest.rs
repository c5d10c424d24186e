use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{run_pipeline, PipelineOutput, StageTimings};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::io::{read_file, read_text, write_atomic};
use crate::providers::{decode_frames, NoFaces};
use crate::reid::{parse_trajectory_records, TrajectoryFeature};

pub const OUTPUT_FILES: [&str; 3] = ["tracks.csv", "trajectories.jsonl", "majors.jsonl"];
const MANIFEST: &str = "manifest.json";

/// Everything needed to repeat a run: written last, after the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Full `key = value` config text.
    pub config: String,
    pub input: PathBuf,
    pub input_sha256: String,
    pub seed: Option<u64>,
    pub dump_intermediates: bool,
    pub timings: StageTimings,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| {
            let before: usize = text.split_inclusive('\n').take(e.line().saturating_sub(1)).map(str::len).sum();
            Error::format((before + e.column().saturating_sub(1)) as u64, format!("bad manifest: {e}"))
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(e.to_string()))?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

pub fn input_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_outputs(out: &PipelineOutput, dir: &Path, dump: bool, h0: usize, w0: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, Vec<u8>)> = vec![
        (OUTPUT_FILES[0], out.tracks_csv().into_bytes()),
        (OUTPUT_FILES[1], out.trajectories_jsonl()?.into_bytes()),
        (OUTPUT_FILES[2], out.majors_jsonl()?.into_bytes()),
    ];
    if dump {
        files.push(("detections.csv", out.detections_csv().into_bytes()));
        files.push(("shots.json", out.shots_json().into_bytes()));
        if let Some(bytes) = out.attention_dump(h0, w0) {
            files.push(("attention.bin", bytes));
        }
    }
    let mut written = Vec::new();
    for (name, bytes) in files {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        written.push(p);
    }
    Ok(written)
}

/// Run the pipeline on a frames file, write the outputs and a manifest into `out_dir`.
pub fn run_to_dir(
    input: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
    dump_intermediates: bool,
    seed: Option<u64>,
) -> Result<(RunManifest, PipelineOutput)> {
    let bytes = read_file(input)?;
    let frames = decode_frames(&bytes)?;
    let out = run_pipeline(&frames, &NoFaces, cfg, dump_intermediates)?;
    let (h0, w0) = frames
        .first()
        .map(|f| (f.pyramid[0].height(), f.pyramid[0].width()))
        .unwrap_or_default();
    let outputs = write_outputs(&out, out_dir, dump_intermediates, h0, w0)?;
    let manifest = RunManifest {
        config: cfg.to_text(),
        input: std::fs::canonicalize(input).unwrap_or_else(|_| input.to_path_buf()),
        input_sha256: input_digest(&bytes),
        seed,
        dump_intermediates,
        timings: out.timings.clone(),
        outputs,
    };
    manifest.save(&out_dir.join(MANIFEST))?;
    Ok((manifest, out))
}

/// Repeat the run described by a manifest, writing into `out_dir`.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let m = RunManifest::load(manifest_path)?;
    let digest = input_digest(&read_file(&m.input)?);
    if digest != m.input_sha256 {
        return Err(Error::Contract(format!("input {} changed since the recorded run", m.input.display())));
    }
    let cfg = PipelineConfig::from_text(&m.config)?;
    Ok(run_to_dir(&m.input, &cfg, out_dir, m.dump_intermediates, m.seed)?.0)
}

/// Major objects of a video, reusing a previous run in `cache_dir` when the
/// input bytes and config are unchanged.
pub fn cached_majors(input: &Path, cfg: &PipelineConfig, cache_dir: &Path) -> Result<Vec<TrajectoryFeature>> {
    let bytes = read_file(input)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    h.update(cfg.to_text().as_bytes());
    let dir = cache_dir.join(hex::encode(h.finalize()));
    let majors = dir.join(OUTPUT_FILES[2]);
    if dir.join(MANIFEST).is_file() {
        log::debug!("{}: cached run in {}", input.display(), dir.display());
    } else {
        run_to_dir(input, cfg, &dir, false, None)?;
    }
    let text = read_text(&majors)?;
    Ok(parse_trajectory_records(&text)?.iter().map(|r| r.to_feature()).collect())
}
