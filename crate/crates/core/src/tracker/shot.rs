use std::ops::Range;

/// Sorted cut frames of a video; shot `k` runs from cut `k-1` (or 0) to cut `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotBoundaryList {
    pub cuts: Vec<u32>,
    pub n_frames: u32,
}

impl ShotBoundaryList {
    pub fn single(n_frames: u32) -> Self {
        ShotBoundaryList {
            cuts: Vec::new(),
            n_frames,
        }
    }

    pub fn shots(&self) -> Vec<Range<u32>> {
        let mut starts = vec![0];
        starts.extend(&self.cuts);
        let mut ends = self.cuts.clone();
        ends.push(self.n_frames);
        starts.into_iter().zip(ends).map(|(s, e)| s..e).collect()
    }

    pub fn shot_of(&self, frame: u32) -> u32 {
        self.cuts.partition_point(|&c| c <= frame) as u32
    }
}

pub fn histogram_l1(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).abs()).sum()
}

/// Cut at `t` when the L1 distance between the histograms of `t-1` and `t`
/// exceeds `threshold`; a cut within 2 frames of the previous shot start is
/// merged into it.
pub fn detect_shot_boundaries(histograms: &[Vec<f32>], threshold: f64) -> ShotBoundaryList {
    let mut cuts = Vec::new();
    let mut start = 0usize;
    for t in 1..histograms.len() {
        if histogram_l1(&histograms[t - 1], &histograms[t]) > threshold && t - start >= 2 {
            cuts.push(t as u32);
            start = t;
        }
    }
    ShotBoundaryList {
        cuts,
        n_frames: histograms.len() as u32,
    }
}
