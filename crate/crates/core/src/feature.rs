//! Dense feature maps and the small vector primitives built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `channels x height x width` activation grid, channel-major then row then column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(Error::Dimension(format!(
                "{} values for a {channels}x{height}x{width} map",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite activation at index {i}")));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            values,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        FeatureMap {
            channels,
            height,
            width,
            values: vec![0.0; channels * height * width],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.values[(c * self.height + y) * self.width + x]
    }

    /// Channel vector of one spatial cell.
    pub fn cell(&self, y: usize, x: usize) -> Vec<f32> {
        (0..self.channels).map(|c| self.get(c, y, x)).collect()
    }

    /// L2 norm of every cell's channel vector, row-major `height x width`.
    pub fn cell_norms(&self) -> Vec<f32> {
        let plane = self.cells();
        let mut acc = vec![0f64; plane];
        for c in 0..self.channels {
            let chan = &self.values[c * plane..(c + 1) * plane];
            for (a, v) in acc.iter_mut().zip(chan) {
                *a += (*v as f64) * (*v as f64);
            }
        }
        acc.into_iter().map(|a| a.sqrt() as f32).collect()
    }

    /// Copy of the sub-grid `[y0, y1) x [x0, x1)`.
    pub fn region(&self, y0: usize, y1: usize, x0: usize, x1: usize) -> Result<FeatureMap> {
        if y0 >= y1 || x0 >= x1 || y1 > self.height || x1 > self.width {
            return Err(Error::Dimension(format!(
                "region [{y0},{y1})x[{x0},{x1}) outside {}x{}",
                self.height, self.width
            )));
        }
        let (h, w) = (y1 - y0, x1 - x0);
        let mut values = Vec::with_capacity(self.channels * h * w);
        for c in 0..self.channels {
            for y in y0..y1 {
                let start = (c * self.height + y) * self.width;
                values.extend_from_slice(&self.values[start + x0..start + x1]);
            }
        }
        Ok(FeatureMap {
            channels: self.channels,
            height: h,
            width: w,
            values,
        })
    }

    /// Spatial mean of each channel.
    pub fn average_pool(&self) -> Vec<f32> {
        let plane = self.cells().max(1);
        self.values
            .chunks(plane)
            .map(|chan| (chan.iter().map(|&v| v as f64).sum::<f64>() / plane as f64) as f32)
            .collect()
    }
}

/// Cells whose norm is already within this of 1 are left untouched, which
/// makes normalization exactly idempotent under f32 storage.
const UNIT_TOLERANCE: f32 = 1e-6;

/// Scale every cell's channel vector to unit norm; zero cells stay zero.
pub fn l2_normalize_cells(map: &FeatureMap) -> FeatureMap {
    let norms = map.cell_norms();
    let plane = map.cells();
    let mut out = map.clone();
    for chan in out.values_mut().chunks_mut(plane.max(1)) {
        for (v, n) in chan.iter_mut().zip(&norms) {
            if *n == 0.0 {
                *v = 0.0;
            } else if (*n - 1.0).abs() > UNIT_TOLERANCE {
                *v /= *n;
            }
        }
    }
    out
}

pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(a, b)| *a as f64 * *b as f64).sum()
}

pub fn norm(u: &[f32]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine of the angle between two non-zero vectors.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!("vector lengths {} and {}", u.len(), v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate("zero-norm vector in cosine similarity".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Unit-norm copy of `u`.
pub fn normalized(u: &[f32]) -> Result<Vec<f32>> {
    let n = norm(u);
    if n == 0.0 {
        return Err(Error::Degenerate("cannot normalize a zero vector".into()));
    }
    Ok(u.iter().map(|v| (*v as f64 / n) as f32).collect())
}

/// Cell-major copy of a map with unit-normalized cells, the layout used by
/// the correlation kernels (each cell's channels contiguous).
#[derive(Debug, Clone)]
pub(crate) struct UnitCells {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl UnitCells {
    pub fn from_map(map: &FeatureMap) -> Self {
        let (c, h, w) = (map.channels(), map.height(), map.width());
        let norms = map.cell_norms();
        let mut data = vec![0f32; c * h * w];
        for (ch, chan) in map.values().chunks(h * w).enumerate() {
            for (cell, v) in chan.iter().enumerate() {
                let n = norms[cell];
                if n > 0.0 {
                    data[cell * c + ch] = v / n;
                }
            }
        }
        UnitCells {
            height: h,
            width: w,
            channels: c,
            data,
        }
    }

    #[cfg(test)]
    pub fn cell(&self, y: usize, x: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }
}

/// Position of a crop on its scale level, in level cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialInfo {
    pub cx: f32,
    pub cy: f32,
    pub w: f32,
    pub h: f32,
    pub frame_index: u32,
    pub confidence: f32,
    pub scale_level: u8,
}

/// A cropped feature region with the metadata it was cut with.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCrop {
    pub data: FeatureMap,
    pub spatial: SpatialInfo,
}

impl FeatureCrop {
    /// Average-pooled channel vector, the crop's compact appearance signature.
    pub fn pooled(&self) -> Vec<f32> {
        self.data.average_pool()
    }
}
