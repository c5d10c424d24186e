//! Little-endian frame bundle files.
//!
//! ```text
//! "SVRB" u32 version=1 u32 n_frames u32 C u32 H0 u32 W0
//! per frame:
//!   f32 grids for levels 0..2 (C x Hl x Wl, Hl = ceil(H0 / 2^l))
//!   u32 n_candidates, then n x 6 f32 (cx, cy, w, h, conf, class)
//!   48 f32 histogram
//! ```
//! Frame indices are implied by file order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::feature::FeatureMap;
use crate::geometry::{BoundingBox, Detection};
use crate::providers::{level_dims, FrameBundle, HIST_LEN};

pub const MAGIC: &[u8; 4] = b"SVRB";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, vs: &[f32]) {
    out.reserve(vs.len() * 4);
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_frames(frames: &[FrameBundle]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, frames.len() as u32);
    let (c, h0, w0) = frames
        .first()
        .map(|f| {
            let m = &f.pyramid[0];
            (m.channels(), m.height(), m.width())
        })
        .unwrap_or((0, 0, 0));
    put_u32(&mut out, c as u32);
    put_u32(&mut out, h0 as u32);
    put_u32(&mut out, w0 as u32);
    for (i, frame) in frames.iter().enumerate() {
        frame.validate()?;
        let m = &frame.pyramid[0];
        if (m.channels(), m.height(), m.width()) != (c, h0, w0) {
            return Err(Error::Dimension(format!("frame {i} pyramid differs from frame 0")));
        }
        if frame.frame_index != i as u32 {
            return Err(Error::Contract(format!(
                "frame at position {i} has index {}",
                frame.frame_index
            )));
        }
        for level in &frame.pyramid {
            put_f32s(&mut out, level.values());
        }
        put_u32(&mut out, frame.candidates.len() as u32);
        for d in &frame.candidates {
            let b = d.bbox;
            put_f32s(&mut out, &[b.cx, b.cy, b.w, b.h, d.confidence, d.class_id as f32]);
        }
        put_f32s(&mut out, &frame.rgb_histogram);
    }
    Ok(out)
}

pub fn write_frames<W: Write>(mut w: W, frames: &[FrameBundle]) -> Result<()> {
    w.write_all(&encode_frames(frames)?)?;
    Ok(())
}

/// Atomically writes `frames` to `path`.
pub fn save_frames(path: &Path, frames: &[FrameBundle]) -> Result<()> {
    crate::io::write_atomic(path, &encode_frames(frames)?)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!(
                    "truncated: need {n} bytes for {what}, {} remain",
                    self.buf.len() - self.pos
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let bytes = n
            .checked_mul(4)
            .ok_or_else(|| Error::format(self.pos as u64, format!("{what} size overflows")))?;
        let b = self.take(bytes, what)?;
        Ok(b.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

pub fn decode_frames(buf: &[u8]) -> Result<Vec<FrameBundle>> {
    if buf.len() < 4 {
        return Err(Error::format(0, "missing magic"));
    }
    if &buf[..4] != MAGIC {
        return Err(Error::format(0, "bad magic"));
    }
    let mut cur = Cursor { buf, pos: 4 };
    let version_at = cur.pos as u64;
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::format(version_at, format!("unsupported version {version}")));
    }
    let n_frames = cur.u32("frame count")? as usize;
    let c = cur.u32("channel count")? as usize;
    let h0 = cur.u32("height")? as usize;
    let w0 = cur.u32("width")? as usize;
    let dims: Vec<(usize, usize)> = (0..3).map(|l| level_dims(h0, w0, l)).collect();

    let mut frames = Vec::with_capacity(n_frames.min(1 << 16));
    for fi in 0..n_frames {
        let frame_index = fi as u32;
        let mut levels = Vec::with_capacity(3);
        for (l, &(h, w)) in dims.iter().enumerate() {
            let at = cur.pos as u64;
            let n = c
                .checked_mul(h)
                .and_then(|v| v.checked_mul(w))
                .ok_or_else(|| Error::format(at, "grid size overflows"))?;
            let vals = cur.f32s(n, &format!("frame {fi} level {l} grid"))?;
            levels.push(FeatureMap::new(c, h, w, vals).map_err(|e| Error::format(at, e.to_string()))?);
        }
        let n_cand = cur.u32("candidate count")? as usize;
        let mut candidates = Vec::with_capacity(n_cand.min(4096));
        for _ in 0..n_cand {
            let at = cur.pos as u64;
            let v = cur.f32s(6, "candidate")?;
            let det = BoundingBox::new(v[0], v[1], v[2], v[3])
                .and_then(|b| Detection::new(b, v[4], v[5] as u32, frame_index))
                .map_err(|e| Error::format(at, e.to_string()))?;
            candidates.push(det);
        }
        let rgb_histogram = cur.f32s(HIST_LEN, "histogram")?;
        let mut it = levels.into_iter();
        let pyramid = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        frames.push(FrameBundle {
            frame_index,
            pyramid,
            candidates,
            rgb_histogram,
        });
    }
    if cur.pos != buf.len() {
        return Err(Error::format(cur.pos as u64, "trailing bytes after last frame"));
    }
    Ok(frames)
}

pub fn read_frames<R: Read>(mut r: R) -> Result<Vec<FrameBundle>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_frames(&buf)
}

pub fn load_frames(path: &Path) -> Result<Vec<FrameBundle>> {
    decode_frames(&crate::io::read_file(path)?)
}

/// Attention dumps reuse the grid framing with magic `SVAT`: per frame and
/// level, a `3 x Hl x Wl` grid holding the ls, ll and gs maps.
pub fn encode_attention_dump(h0: usize, w0: usize, frames: &[[Vec<f32>; 3]]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"SVAT");
    put_u32(&mut out, VERSION);
    put_u32(&mut out, frames.len() as u32);
    put_u32(&mut out, 3);
    put_u32(&mut out, h0 as u32);
    put_u32(&mut out, w0 as u32);
    for levels in frames {
        for grid in levels {
            put_f32s(&mut out, grid);
        }
    }
    out
}
