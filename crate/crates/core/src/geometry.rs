//! Boxes and detections in frame pixel coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in center form, continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f32,
    pub cy: f32,
    pub w: f32,
    pub h: f32,
}

impl BoundingBox {
    pub fn new(cx: f32, cy: f32, w: f32, h: f32) -> Result<Self> {
        let b = BoundingBox { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.cx, self.cy, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite || self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::Degenerate(format!("invalid box {self:?}")));
        }
        Ok(())
    }

    pub fn from_corners(x0: f32, y0: f32, x1: f32, y1: f32) -> Result<Self> {
        Self::new((x0 + x1) * 0.5, (y0 + y1) * 0.5, x1 - x0, y1 - y0)
    }

    /// `(x0, y0, x1, y1)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        let (cx, cy, hw, hh) = (
            self.cx as f64,
            self.cy as f64,
            self.w as f64 * 0.5,
            self.h as f64 * 0.5,
        );
        (cx - hw, cy - hh, cx + hw, cy + hh)
    }

    pub fn area(&self) -> f64 {
        self.w as f64 * self.h as f64
    }

    /// Whether the box overlaps the frame `[0, width) x [0, height)` with positive area.
    pub fn intersects_frame(&self, width: f64, height: f64) -> bool {
        let (x0, y0, x1, y1) = self.corners();
        x1.min(width) > x0.max(0.0) && y1.min(height) > y0.max(0.0)
    }
}

/// Intersection over union.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub confidence: f32,
    pub class_id: u32,
    pub frame_index: u32,
}

impl Detection {
    pub fn new(bbox: BoundingBox, confidence: f32, class_id: u32, frame_index: u32) -> Result<Self> {
        bbox.validate()?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Degenerate(format!("confidence {confidence} outside [0,1]")));
        }
        Ok(Detection {
            bbox,
            confidence,
            class_id,
            frame_index,
        })
    }
}
