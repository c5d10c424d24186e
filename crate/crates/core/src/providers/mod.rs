//! Sources of per-frame feature pyramids, candidate detections and face
//! features: a binary file format for precomputed data and a seeded
//! synthetic scenario generator.

pub mod binfmt;
pub mod csv;
pub mod extractor;
pub mod scenario;

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::geometry::{BoundingBox, Detection};

pub use binfmt::{decode_frames, encode_frames, load_frames, read_frames, save_frames, write_frames};
pub use csv::{DetectionRecord, TrackRecord};
pub use extractor::CandidateExtractor;
pub use scenario::{
    generate_scenario, DegradeWindow, GroundTruth, GtRecord, ObjectScript, ScenarioSpec,
    SyntheticFaces,
};

/// Frames are resized and padded to this square size before feature extraction.
pub const NOMINAL_FRAME_SIZE: u32 = 608;
/// Pixel stride of each pyramid level.
pub const LEVEL_STRIDES: [u32; 3] = [8, 16, 32];
pub const HIST_BINS: usize = 16;
pub const HIST_LEN: usize = 3 * HIST_BINS;

pub fn level_stride(level: usize) -> f32 {
    LEVEL_STRIDES[level] as f32
}

/// Spatial size of a level given the level-0 size.
pub fn level_dims(h0: usize, w0: usize, level: usize) -> (usize, usize) {
    let div = 1usize << level;
    (h0.div_ceil(div), w0.div_ceil(div))
}

/// Level-0 grid size for the nominal frame.
pub fn nominal_level0() -> (usize, usize) {
    let s = (NOMINAL_FRAME_SIZE / LEVEL_STRIDES[0]) as usize;
    (s, s)
}

/// Everything the pipeline consumes for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub frame_index: u32,
    /// Levels 0, 1, 2 at strides 8, 16, 32.
    pub pyramid: [FeatureMap; 3],
    pub candidates: Vec<Detection>,
    /// Three 16-bin channel histograms, each summing to one.
    pub rgb_histogram: Vec<f32>,
}

impl FrameBundle {
    pub fn validate(&self) -> Result<()> {
        let base = &self.pyramid[0];
        for (level, map) in self.pyramid.iter().enumerate().skip(1) {
            let (h, w) = level_dims(base.height(), base.width(), level);
            if map.height() != h || map.width() != w || map.channels() != base.channels() {
                return Err(Error::Dimension(format!(
                    "level {level} is {}x{}x{}, expected {}x{h}x{w}",
                    map.channels(),
                    map.height(),
                    map.width(),
                    base.channels()
                )));
            }
        }
        if self.rgb_histogram.len() != HIST_LEN {
            return Err(Error::Dimension(format!(
                "histogram has {} bins, expected {HIST_LEN}",
                self.rgb_histogram.len()
            )));
        }
        for (c, chan) in self.rgb_histogram.chunks(HIST_BINS).enumerate() {
            let sum: f64 = chan.iter().map(|&v| v as f64).sum();
            if (sum - 1.0).abs() > 1e-5 || chan.iter().any(|v| *v < 0.0) {
                return Err(Error::Degenerate(format!("histogram channel {c} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// Frame extent in pixels implied by the level-0 grid.
    pub fn frame_size(&self) -> (f64, f64) {
        let s = LEVEL_STRIDES[0] as f64;
        (self.pyramid[0].width() as f64 * s, self.pyramid[0].height() as f64 * s)
    }
}

/// Optional face embedding for a box; absence means no face was found.
pub trait FaceProvider: Sync {
    fn face_features(&self, frame: &FrameBundle, bbox: &BoundingBox) -> Option<Vec<f32>>;
}

/// Provider for inputs without any face model.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFaces;

impl FaceProvider for NoFaces {
    fn face_features(&self, _frame: &FrameBundle, _bbox: &BoundingBox) -> Option<Vec<f32>> {
        None
    }
}
