use crate::error::{Error, Result};
use crate::feature::{FeatureCrop, FeatureMap, SpatialInfo, UnitCells};

use super::pool::GlobalSet;
use super::xcorr::{xcorr_cells, Grid};

/// Per-cell attention weights in [0, 1] for one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl AttentionMap {
    pub fn zeros(height: usize, width: usize) -> Self {
        AttentionMap {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    /// Clips every value into [0, 1]; NaN becomes 0.
    pub fn from_clipped(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::Dimension(format!(
                "{} values for a {height}x{width} attention map",
                values.len()
            )));
        }
        let values = values
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Ok(AttentionMap { height, width, values })
    }

    fn from_grid(g: Grid) -> Self {
        AttentionMap::from_clipped(g.height, g.width, g.values).expect("grid shape is consistent")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

fn check_history_dims(crops: &[FeatureCrop], current: &FeatureMap) -> Result<()> {
    for c in crops {
        if c.data.channels() != current.channels() {
            return Err(Error::Dimension(format!(
                "crop has {} channels, map has {}",
                c.data.channels(),
                current.channels()
            )));
        }
    }
    Ok(())
}

fn summed_xcorr(crops: &[FeatureCrop], current: &UnitCells) -> Result<Grid> {
    let mut acc = Grid::zeros(current.height, current.width);
    for c in crops {
        let g = xcorr_cells(&UnitCells::from_map(&c.data), current)?;
        for (a, v) in acc.values.iter_mut().zip(g.values) {
            *a += v;
        }
    }
    Ok(acc)
}

/// Mean over past frames of the clipped per-frame sum of crop correlations.
pub fn local_semantic_attention(history: &[Vec<FeatureCrop>], current: &FeatureMap) -> Result<AttentionMap> {
    let (h, w) = (current.height(), current.width());
    if history.is_empty() {
        return Ok(AttentionMap::zeros(h, w));
    }
    let cells = UnitCells::from_map(current);
    let mut acc = vec![0f32; h * w];
    for frame in history {
        check_history_dims(frame, current)?;
        let g = summed_xcorr(frame, &cells)?;
        for (a, v) in acc.iter_mut().zip(g.values) {
            *a += v.clamp(0.0, 1.0);
        }
    }
    let n = history.len() as f32;
    AttentionMap::from_clipped(h, w, acc.into_iter().map(|v| v / n).collect())
}

/// Clipped sum of correlations of every global-set entry with the map.
pub fn global_semantic_attention(global: &GlobalSet, current: &FeatureMap) -> Result<AttentionMap> {
    let crops: Vec<FeatureCrop> = global.entries().iter().map(|e| e.crop.clone()).collect();
    check_history_dims(&crops, current)?;
    let cells = UnitCells::from_map(current);
    Ok(AttentionMap::from_grid(summed_xcorr(&crops, &cells)?))
}

/// Discrete Hann taper `0.5 (1 - cos(2 pi n / (L - 1)))`; a single tap is 1.
pub fn hann(n: usize, len: usize) -> f64 {
    if len <= 1 {
        return 1.0;
    }
    0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos())
}

/// Cells covered by a 1-D window of `len` taps centered at `center`, with
/// their tap values. Odd windows center on the cell containing `center`;
/// even windows center on the nearest cell boundary.
fn hann_profile(center: f32, len: usize, out_len: usize) -> Vec<(usize, f64)> {
    let first = if len % 2 == 1 {
        center.floor() as i64 - (len as i64 - 1) / 2
    } else {
        center.round() as i64 - len as i64 / 2
    };
    (0..len)
        .filter_map(|k| {
            let pos = first + k as i64;
            (pos >= 0 && pos < out_len as i64).then(|| (pos as usize, hann(k, len)))
        })
        .collect()
}

const THRESHOLD_SLACK: f64 = 1e-12;

fn window_len(extent: f32) -> usize {
    (extent.round() as i64).max(1) as usize
}

fn add_window(acc: &mut [f64], spat: &SpatialInfo, out_h: usize, out_w: usize, threshold: f64) {
    let ys = hann_profile(spat.cy, window_len(spat.h), out_h);
    let xs = hann_profile(spat.cx, window_len(spat.w), out_w);
    for &(y, wy) in &ys {
        for &(x, wx) in &xs {
            let v = wy * wx;
            // taps that equal the threshold analytically can land an ulp below it
            if v >= threshold - THRESHOLD_SLACK {
                acc[y * out_w + x] += v;
            }
        }
    }
}

/// Truncated 2-D Hann window over an object's extent, zero below `threshold`.
pub fn hanning_window_2d(spat: &SpatialInfo, out_h: usize, out_w: usize, threshold: f64) -> AttentionMap {
    let mut acc = vec![0f64; out_h * out_w];
    add_window(&mut acc, spat, out_h, out_w, threshold);
    AttentionMap::from_clipped(out_h, out_w, acc.into_iter().map(|v| v as f32).collect())
        .expect("window shape is consistent")
}

/// Sum of truncated windows of every stored object, averaged over frames.
pub fn local_localization_attention(
    history: &[Vec<SpatialInfo>],
    out_h: usize,
    out_w: usize,
    threshold: f64,
) -> AttentionMap {
    if history.is_empty() {
        return AttentionMap::zeros(out_h, out_w);
    }
    let mut acc = vec![0f64; out_h * out_w];
    for frame in history {
        for s in frame {
            add_window(&mut acc, s, out_h, out_w, threshold);
        }
    }
    let n = history.len() as f64;
    AttentionMap::from_clipped(out_h, out_w, acc.into_iter().map(|v| (v / n) as f32).collect())
        .expect("window shape is consistent")
}

/// Scale every channel by `1 + attn` cell-wise.
pub fn apply_attention(map: &FeatureMap, attn: &AttentionMap) -> Result<FeatureMap> {
    if map.height() != attn.height || map.width() != attn.width {
        return Err(Error::Dimension(format!(
            "attention {}x{} does not match map {}x{}",
            attn.height,
            attn.width,
            map.height(),
            map.width()
        )));
    }
    let mut out = map.clone();
    let plane = attn.values.len();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        *v *= 1.0 + attn.values[i % plane];
    }
    Ok(out)
}
