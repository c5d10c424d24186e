//! Peak-energy candidate extraction, the stand-in detection head.
//!
//! A candidate is a local maximum of per-cell activation energy (the L2 norm
//! of the cell's channel vector) above a threshold. Peaks and confidences
//! come from the score map; box geometry is fit on the geometry map, so an
//! attention-modulated map can be scored while boxes are regressed from the
//! unmodulated features.

use crate::feature::FeatureMap;
use crate::geometry::{BoundingBox, Detection};

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateExtractor {
    /// Absolute lower bound on the energy threshold.
    pub floor: f32,
    /// Peak energy mapped to confidence 1.
    pub confidence_scale: f32,
    /// Label given to every candidate; the synthetic head is class-agnostic.
    pub class_id: u32,
    pub stride: f32,
}

impl Default for CandidateExtractor {
    fn default() -> Self {
        CandidateExtractor {
            floor: 0.2,
            confidence_scale: 1.25,
            class_id: 0,
            stride: 8.0,
        }
    }
}

/// Background statistics of a map's cell energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyStats {
    pub median: f32,
    pub sigma: f32,
}

fn median(v: &mut [f32]) -> f32 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Robust background mean and standard deviation (median and scaled MAD),
/// insensitive to the few cells covered by objects.
pub fn energy_stats(map: &FeatureMap) -> EnergyStats {
    let mut e = map.cell_norms();
    let med = median(&mut e);
    let mut dev: Vec<f32> = e.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut dev);
    EnergyStats {
        median: med,
        sigma: 1.4826 * mad,
    }
}

/// Weighted least-squares parabola through `ln e` at integer offsets;
/// returns `(vertex, sigma)` in cells when the fit is concave.
fn gaussian_fit(samples: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64, f64)> = samples
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(d, e)| (d, e.ln(), e * e))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    // normal equations for y = a + b d + c d^2
    let mut m = [[0f64; 3]; 3];
    let mut r = [0f64; 3];
    for &(d, y, w) in &pts {
        let basis = [1.0, d, d * d];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * basis[i] * basis[j];
            }
            r[i] += w * basis[i] * y;
        }
    }
    let sol = solve3(m, r)?;
    let (b, c) = (sol[1], sol[2]);
    // NaN falls through here too
    if c.is_nan() || c >= -1e-9 {
        return None;
    }
    let sigma = (-1.0 / (2.0 * c)).sqrt();
    let vertex = -b / (2.0 * c);
    Some((vertex, sigma))
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                let pivot = m[col];
                for (x, p) in m[row].iter_mut().zip(pivot) {
                    *x -= f * p;
                }
                r[row] -= f * r[col];
            }
        }
    }
    Some([r[0] / m[0][0], r[1] / m[1][1], r[2] / m[2][2]])
}

const FIT_RADIUS: i64 = 2;
const SIGMA_RANGE: (f64, f64) = (0.35, 8.0);
const DEFAULT_SIGMA: f64 = 1.0;

impl CandidateExtractor {
    /// Detection threshold for a frame: background mean + 3 sigma, floored.
    pub fn threshold(&self, base: &FeatureMap) -> f32 {
        let s = energy_stats(base);
        (s.median + 3.0 * s.sigma).max(self.floor)
    }

    /// Extract candidates from a single unmodulated map.
    pub fn extract_plain(&self, map: &FeatureMap, frame_index: u32) -> Vec<Detection> {
        let thr = self.threshold(map);
        self.extract(map, map, thr, frame_index)
    }

    pub fn extract(
        &self,
        score: &FeatureMap,
        geometry: &FeatureMap,
        threshold: f32,
        frame_index: u32,
    ) -> Vec<Detection> {
        let (h, w) = (score.height(), score.width());
        let energy = score.cell_norms();
        let geo = geometry.cell_norms();
        let bg = energy_stats(geometry).median;
        let at = |y: i64, x: i64| energy[(y as usize) * w + x as usize];
        let mut out = Vec::new();
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let e = at(y, x);
                if e <= threshold {
                    continue;
                }
                let mut is_peak = true;
                'nb: for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        if dy == 0 && dx == 0 {
                            continue;
                        }
                        let (ny, nx) = (y + dy, x + dx);
                        if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                            continue;
                        }
                        let n = at(ny, nx);
                        // plateaus resolve to the first cell in scan order
                        let earlier = (dy, dx) < (0, 0);
                        if n > e || (earlier && n == e) {
                            is_peak = false;
                            break 'nb;
                        }
                    }
                }
                if !is_peak {
                    continue;
                }
                let sample = |yy: i64, xx: i64| -> Option<f64> {
                    if yy < 0 || xx < 0 || yy >= h as i64 || xx >= w as i64 {
                        None
                    } else {
                        Some((geo[(yy as usize) * w + xx as usize] - bg) as f64)
                    }
                };
                let along = |horizontal: bool| -> (f64, f64) {
                    let pts: Vec<(f64, f64)> = (-FIT_RADIUS..=FIT_RADIUS)
                        .filter_map(|d| {
                            let v = if horizontal { sample(y, x + d) } else { sample(y + d, x) };
                            v.map(|e| (d as f64, e))
                        })
                        .collect();
                    match gaussian_fit(&pts) {
                        Some((v, s)) => (v.clamp(-1.0, 1.0), s.clamp(SIGMA_RANGE.0, SIGMA_RANGE.1)),
                        None => (0.0, DEFAULT_SIGMA),
                    }
                };
                let (ox, sx) = along(true);
                let (oy, sy) = along(false);
                let s = self.stride as f64;
                let bbox = BoundingBox {
                    cx: ((x as f64 + 0.5 + ox) * s) as f32,
                    cy: ((y as f64 + 0.5 + oy) * s) as f32,
                    w: (4.0 * sx * s) as f32,
                    h: (4.0 * sy * s) as f32,
                };
                out.push(Detection {
                    bbox,
                    confidence: (e / self.confidence_scale).clamp(0.0, 1.0),
                    class_id: self.class_id,
                    frame_index,
                });
            }
        }
        out
    }
}
