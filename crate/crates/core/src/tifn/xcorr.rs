use crate::error::{Error, Result};
use crate::feature::{FeatureCrop, FeatureMap, UnitCells};

/// A dense real-valued `height x width` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl Grid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Grid {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Row-major index of the maximum value (first on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.width.max(1), best % self.width.max(1))
    }
}

/// Normalized cross-correlation of a crop over a map.
///
/// Both operands are cell-normalized; the valid-mode sliding sum of cell dot
/// products is divided by the crop's cell count, so a perfect match scores 1.
/// The valid region is written back into a map-sized zero grid with each
/// value at the cell under the crop's center (offset `(h-1)/2, (w-1)/2`).
pub fn xcorr(crop: &FeatureCrop, map: &FeatureMap) -> Result<Grid> {
    let c = UnitCells::from_map(&crop.data);
    let m = UnitCells::from_map(map);
    xcorr_cells(&c, &m)
}

pub(crate) fn xcorr_cells(crop: &UnitCells, map: &UnitCells) -> Result<Grid> {
    if crop.channels != map.channels {
        return Err(Error::Dimension(format!(
            "crop has {} channels, map has {}",
            crop.channels, map.channels
        )));
    }
    if crop.height > map.height || crop.width > map.width {
        return Err(Error::Dimension(format!(
            "crop {}x{} larger than map {}x{}",
            crop.height, crop.width, map.height, map.width
        )));
    }
    let (vh, vw) = (map.height - crop.height + 1, map.width - crop.width + 1);
    let (cc, mc, c) = (crop.cells(), map.cells(), map.channels);
    // dots[t][p]: crop cell t against map cell p, one matrix product
    let mut dots = vec![0f32; cc * mc];
    if c > 0 && cc > 0 && mc > 0 {
        // SAFETY: operand shapes and strides match the buffer lengths above
        unsafe {
            matrixmultiply::sgemm(
                cc,
                c,
                mc,
                1.0,
                crop.data.as_ptr(),
                c as isize,
                1,
                map.data.as_ptr(),
                1,
                c as isize,
                0.0,
                dots.as_mut_ptr(),
                mc as isize,
                1,
            );
        }
    }
    let mut valid = vec![0f32; vh * vw];
    for a in 0..crop.height {
        for b in 0..crop.width {
            let plane = &dots[(a * crop.width + b) * mc..][..mc];
            for i in 0..vh {
                let row = &plane[(i + a) * map.width + b..][..vw];
                for (o, v) in valid[i * vw..(i + 1) * vw].iter_mut().zip(row) {
                    *o += v;
                }
            }
        }
    }
    let inv = 1.0 / crop.cells() as f32;
    let (oy, ox) = ((crop.height - 1) / 2, (crop.width - 1) / 2);
    let mut grid = Grid::zeros(map.height, map.width);
    for i in 0..vh {
        for j in 0..vw {
            grid.values[(i + oy) * map.width + j + ox] = (valid[i * vw + j] * inv).clamp(-1.0, 1.0);
        }
    }
    Ok(grid)
}
