use crate::error::{Error, Result};
use crate::feature::{FeatureCrop, FeatureMap, UnitCells};

/// Dense `rows x cols` matrix of cell-pair cosines, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
}

impl ResponseMap {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.cols + j]
    }
}

fn response_cells(d: &UnitCells, t: &UnitCells, out: &mut Vec<f32>) {
    let (m, n, c) = (d.cells(), t.cells(), d.channels);
    out.clear();
    out.resize(m * n, 0.0);
    if m == 0 || n == 0 || c == 0 {
        return;
    }
    // SAFETY: operand shapes and strides match the buffer lengths
    unsafe {
        matrixmultiply::sgemm(
            m,
            c,
            n,
            1.0,
            d.data.as_ptr(),
            c as isize,
            1,
            t.data.as_ptr(),
            1,
            c as isize,
            0.0,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
}

/// Cosine of every detection cell against every tracklet cell; cells with
/// zero norm contribute 0.
pub fn pointwise_response(d: &FeatureCrop, t: &FeatureCrop) -> Result<ResponseMap> {
    if d.data.channels() != t.data.channels() {
        return Err(Error::Dimension(format!(
            "channel mismatch: {} vs {}",
            d.data.channels(),
            t.data.channels()
        )));
    }
    let (du, tu) = (UnitCells::from_map(&d.data), UnitCells::from_map(&t.data));
    let mut values = Vec::new();
    response_cells(&du, &tu, &mut values);
    Ok(ResponseMap {
        rows: du.cells(),
        cols: tu.cells(),
        values,
    })
}

fn topk_mean_slice(values: &mut [f32], k: usize) -> f64 {
    let k = k.min(values.len());
    if k < values.len() {
        values.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    values[..k].iter().map(|v| *v as f64).sum::<f64>() / k as f64
}

/// Mean of the `k` largest entries (all entries when fewer than `k`).
pub fn topk_mean(a: &ResponseMap, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("top-k needs k >= 1".into()));
    }
    if a.values.is_empty() {
        return Err(Error::Dimension("empty response map".into()));
    }
    let mut v = a.values.clone();
    Ok(topk_mean_slice(&mut v, k))
}

/// Default k: a tenth of the smaller crop's cells, rounded up.
pub fn auto_k(cells_a: usize, cells_b: usize) -> usize {
    (cells_a.min(cells_b) as f64 * 0.1).ceil().max(1.0) as usize
}

/// Average contiguous channel groups down to `target` channels; group `i`
/// spans channels `floor(i C / target) .. floor((i + 1) C / target)`.
pub fn project_channels(map: &FeatureMap, target: usize) -> Result<FeatureMap> {
    let c = map.channels();
    if target == 0 || target > c {
        return Err(Error::Dimension(format!("cannot project {c} channels to {target}")));
    }
    if target == c {
        return Ok(map.clone());
    }
    let plane = map.height() * map.width();
    let mut out = vec![0f32; target * plane];
    for g in 0..target {
        let (lo, hi) = (g * c / target, (g + 1) * c / target);
        let dst = &mut out[g * plane..(g + 1) * plane];
        for ch in lo..hi {
            for (o, v) in dst.iter_mut().zip(&map.values()[ch * plane..(ch + 1) * plane]) {
                *o += v;
            }
        }
        let n = (hi - lo) as f32;
        dst.iter_mut().for_each(|o| *o /= n);
    }
    FeatureMap::new(target, map.height(), map.width(), out)
}

/// Multi-scale crops prepared for repeated affinity queries: channels
/// projected to a common count, cells unit-normalized.
#[derive(Debug, Clone)]
pub struct ScaleCells {
    scales: Vec<UnitCells>,
}

impl ScaleCells {
    pub fn new(crops: &[FeatureCrop], channels: usize) -> Result<Self> {
        if crops.is_empty() {
            return Err(Error::Dimension("no scales".into()));
        }
        let scales = crops
            .iter()
            .map(|c| project_channels(&c.data, channels).map(|m| UnitCells::from_map(&m)))
            .collect::<Result<_>>()?;
        Ok(ScaleCells { scales })
    }

    /// Project to the smallest channel count among the crops.
    pub fn from_crops(crops: &[FeatureCrop]) -> Result<Self> {
        let c = crops.iter().map(|c| c.data.channels()).min().unwrap_or(0);
        ScaleCells::new(crops, c)
    }

    pub fn channels(&self) -> usize {
        self.scales[0].channels
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Mean over all scale pairs of the top-k mean response; `k = 0` uses
    /// [`auto_k`] per pair.
    pub fn similarity(&self, other: &ScaleCells, k: usize) -> Result<f64> {
        if self.channels() != other.channels() {
            return Err(Error::Dimension(format!(
                "channel mismatch: {} vs {}",
                self.channels(),
                other.channels()
            )));
        }
        let mut buf = Vec::new();
        let mut total = 0.0;
        for d in &self.scales {
            for t in &other.scales {
                if d.cells() == 0 || t.cells() == 0 {
                    return Err(Error::Dimension("empty crop".into()));
                }
                response_cells(d, t, &mut buf);
                let kk = if k == 0 { auto_k(d.cells(), t.cells()) } else { k };
                total += topk_mean_slice(&mut buf, kk);
            }
        }
        let n2 = (self.scales.len() * other.scales.len()) as f64;
        Ok((total / n2).clamp(-1.0, 1.0))
    }
}

/// Multi-scale pointwise similarity between a detection and a tracklet crop.
pub fn cpsn_similarity(d_scales: &[FeatureCrop], t_scales: &[FeatureCrop], k: usize) -> Result<f64> {
    let c = d_scales
        .iter()
        .chain(t_scales)
        .map(|c| c.data.channels())
        .min()
        .ok_or_else(|| Error::Dimension("no scales".into()))?;
    ScaleCells::new(d_scales, c)?.similarity(&ScaleCells::new(t_scales, c)?, k)
}
