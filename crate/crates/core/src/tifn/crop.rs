use crate::error::{Error, Result};
use crate::feature::{FeatureCrop, FeatureMap, SpatialInfo};
use crate::geometry::Detection;
use crate::providers::level_stride;

/// Cut the region of `map` under `det`'s box on pyramid level `scale_level`.
///
/// The box is scaled into level cells and rounded outward, then clamped to
/// the map. The crop is always at least one cell.
pub fn crop_feature(map: &FeatureMap, det: &Detection, scale_level: usize) -> Result<FeatureCrop> {
    if scale_level > 2 {
        return Err(Error::Dimension(format!("no pyramid level {scale_level}")));
    }
    let s = level_stride(scale_level) as f64;
    let (x0, y0, x1, y1) = det.bbox.corners();
    let (w, h) = (map.width() as i64, map.height() as i64);
    let cx0 = ((x0 / s).floor() as i64).clamp(0, w);
    let cx1 = ((x1 / s).ceil() as i64).clamp(0, w);
    let cy0 = ((y0 / s).floor() as i64).clamp(0, h);
    let cy1 = ((y1 / s).ceil() as i64).clamp(0, h);
    if cx1 <= cx0 || cy1 <= cy0 {
        return Err(Error::Degenerate(format!(
            "box {:?} does not intersect the {}x{} level-{scale_level} map",
            det.bbox,
            map.height(),
            map.width()
        )));
    }
    let data = map.region(cy0 as usize, cy1 as usize, cx0 as usize, cx1 as usize)?;
    let inside = |v: f64, n: i64| v.clamp(0.0, n as f64 - 1e-3) as f32;
    let spatial = SpatialInfo {
        cx: inside(det.bbox.cx as f64 / s, w),
        cy: inside(det.bbox.cy as f64 / s, h),
        w: (det.bbox.w as f64 / s) as f32,
        h: (det.bbox.h as f64 / s) as f32,
        frame_index: det.frame_index,
        confidence: det.confidence,
        scale_level: scale_level as u8,
    };
    Ok(FeatureCrop { data, spatial })
}
