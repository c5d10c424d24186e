//! Plain CSV exchange of detections, ground truth and track output.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Detection};

pub const DETECTION_HEADER: &str = "frame,id,cx,cy,w,h,conf,class,visible";
pub const TRACK_HEADER: &str = "frame,track_id,cx,cy,w,h,conf,class,shot_id";

/// One row of the detection / ground-truth CSV. Detections carry `id = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub frame: u32,
    pub id: i64,
    pub bbox: BoundingBox,
    pub confidence: f32,
    pub class_id: u32,
    pub visible: bool,
}

impl DetectionRecord {
    pub fn from_detection(d: &Detection) -> Self {
        DetectionRecord {
            frame: d.frame_index,
            id: -1,
            bbox: d.bbox,
            confidence: d.confidence,
            class_id: d.class_id,
            visible: true,
        }
    }

    pub fn to_detection(&self) -> Result<Detection> {
        Detection::new(self.bbox, self.confidence, self.class_id, self.frame)
    }
}

/// One row of per-shot track output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRecord {
    pub frame: u32,
    pub track_id: u32,
    pub bbox: BoundingBox,
    pub confidence: f32,
    pub class_id: u32,
    pub shot_id: u32,
}

fn fields(line: &str, n: usize, lineno: usize) -> Result<Vec<&str>> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != n {
        return Err(Error::Format {
            offset: lineno as u64,
            message: format!("line {lineno}: expected {n} fields, found {}", f.len()),
        });
    }
    Ok(f)
}

fn num<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Format {
        offset: lineno as u64,
        message: format!("line {lineno}: cannot parse `{s}`"),
    })
}

fn body_lines<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => {
            return Err(Error::Format {
                offset: 0,
                message: format!("expected header `{header}`"),
            })
        }
    }
    Ok(lines
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty()))
}

fn parse_box(f: &[&str], lineno: usize) -> Result<BoundingBox> {
    BoundingBox::new(num(f[0], lineno)?, num(f[1], lineno)?, num(f[2], lineno)?, num(f[3], lineno)?).map_err(
        |e| Error::Format {
            offset: lineno as u64,
            message: format!("line {lineno}: {e}"),
        },
    )
}

pub fn write_detections(records: &[DetectionRecord]) -> String {
    let mut s = String::from(DETECTION_HEADER);
    s.push('\n');
    for r in records {
        let b = r.bbox;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.frame, r.id, b.cx, b.cy, b.w, b.h, r.confidence, r.class_id, r.visible as u8
        );
    }
    s
}

pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>> {
    body_lines(text, DETECTION_HEADER)?
        .map(|(lineno, line)| {
            let f = fields(line, 9, lineno)?;
            Ok(DetectionRecord {
                frame: num(f[0], lineno)?,
                id: num(f[1], lineno)?,
                bbox: parse_box(&f[2..6], lineno)?,
                confidence: num(f[6], lineno)?,
                class_id: num(f[7], lineno)?,
                visible: num::<u8>(f[8], lineno)? != 0,
            })
        })
        .collect()
}

pub fn write_tracks(records: &[TrackRecord]) -> String {
    let mut s = String::from(TRACK_HEADER);
    s.push('\n');
    for r in records {
        let b = r.bbox;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.frame, r.track_id, b.cx, b.cy, b.w, b.h, r.confidence, r.class_id, r.shot_id
        );
    }
    s
}

pub fn parse_tracks(text: &str) -> Result<Vec<TrackRecord>> {
    body_lines(text, TRACK_HEADER)?
        .map(|(lineno, line)| {
            let f = fields(line, 9, lineno)?;
            Ok(TrackRecord {
                frame: num(f[0], lineno)?,
                track_id: num(f[1], lineno)?,
                bbox: parse_box(&f[2..6], lineno)?,
                confidence: num(f[6], lineno)?,
                class_id: num(f[7], lineno)?,
                shot_id: num(f[8], lineno)?,
            })
        })
        .collect()
}
