//! Seeded synthetic videos with exact ground truth.
//!
//! Each object is a Gaussian-envelope blob of its appearance vector drawn on
//! every pyramid level over seeded background noise. Appearance drifts by a
//! rotation in a fixed plane containing the initial vector, so the cosine
//! between frames `t0` and `t1` is exactly `cos(drift_rate * (t1 - t0))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::feature::{dot, FeatureMap};
use crate::geometry::{iou, BoundingBox, Detection};
use crate::providers::csv::DetectionRecord;
use crate::providers::extractor::CandidateExtractor;
use crate::providers::{
    level_dims, level_stride, nominal_level0, FaceProvider, FrameBundle, HIST_BINS, HIST_LEN,
    NOMINAL_FRAME_SIZE,
};

/// Frames `[start, end)` during which an object's blob is scaled by `gain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeWindow {
    pub start: u32,
    pub end: u32,
    pub gain: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectScript {
    pub class_id: u32,
    /// Center at frame 0, pixels.
    pub center: (f32, f32),
    /// Pixels per frame; objects bounce off the frame edges.
    pub velocity: (f32, f32),
    /// Width and height at frame 0, pixels.
    pub size: (f32, f32),
    /// Per-frame multiplicative size change.
    pub growth: f32,
    pub degrade: Vec<DegradeWindow>,
    pub face_visible: bool,
    /// Frames `[start, end)` in which the object exists; `None` is always.
    pub present: Option<(u32, u32)>,
}

impl ObjectScript {
    pub fn new(center: (f32, f32), velocity: (f32, f32), size: (f32, f32)) -> Self {
        ObjectScript {
            class_id: 0,
            center,
            velocity,
            size,
            growth: 1.0,
            degrade: Vec::new(),
            face_visible: false,
            present: None,
        }
    }

    fn is_present(&self, frame: u32) -> bool {
        self.present.is_none_or(|(s, e)| frame >= s && frame < e)
    }

    fn gain(&self, frame: u32) -> f32 {
        self.degrade
            .iter()
            .filter(|w| frame >= w.start && frame < w.end)
            .map(|w| w.gain)
            .fold(1.0, f32::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub n_frames: u32,
    /// First frame of each new shot.
    pub shot_cuts: Vec<u32>,
    pub appearance_dim: usize,
    pub objects: Vec<ObjectScript>,
    /// Appearance rotation in radians per frame.
    pub drift_rate: f64,
    /// Per-element standard deviation of background noise.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Draw a fresh horizontal position for every object at each cut.
    pub relocate_on_cut: bool,
    /// Undegraded blob peak energy.
    pub amplitude: f32,
}

impl ScenarioSpec {
    /// Objects on separate horizontal lanes with random speed, size and start.
    pub fn random(n_objects: usize, n_frames: u32, shot_cuts: Vec<u32>, appearance_dim: usize, seed: u64) -> Self {
        let mut rng = stream(seed, TAG_LAYOUT, 0);
        let frame = NOMINAL_FRAME_SIZE as f32;
        let objects = (0..n_objects)
            .map(|i| {
                let lane = (i as f32 + 1.0) * frame / (n_objects as f32 + 1.0);
                let size = (rng.random_range(40.0..72.0), rng.random_range(48.0..80.0));
                let speed = rng.random_range(1.0..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let x = rng.random_range(100.0..frame - 100.0);
                ObjectScript::new((x, lane), (speed, 0.0), size)
            })
            .collect();
        ScenarioSpec {
            n_frames,
            shot_cuts,
            appearance_dim,
            objects,
            drift_rate: 0.0,
            noise_sigma: 0.01,
            seed,
            relocate_on_cut: true,
            amplitude: 1.0,
        }
    }

    /// Add `count` degradation windows of `length` frames per object at seeded positions.
    pub fn with_random_degradation(mut self, count: usize, length: u32, gain: f32) -> Self {
        let mut rng = stream(self.seed, TAG_DEGRADE, 0);
        let n = self.n_frames;
        for obj in &mut self.objects {
            for _ in 0..count {
                if n <= length + 4 {
                    break;
                }
                let start = rng.random_range(4..n - length);
                obj.degrade.push(DegradeWindow {
                    start,
                    end: start + length,
                    gain,
                });
            }
        }
        self
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_frames == 0 {
            return fail("scenario needs at least one frame".into());
        }
        let mut prev = 0;
        for &c in &self.shot_cuts {
            if c <= prev || c >= self.n_frames {
                return fail(format!("shot cut {c} not strictly increasing within (0, {})", self.n_frames));
            }
            prev = c;
        }
        if self.appearance_dim < 2 {
            return fail("appearance_dim must be at least 2".into());
        }
        if !(self.drift_rate >= 0.0 && self.noise_sigma >= 0.0) || !self.drift_rate.is_finite() {
            return fail("drift_rate and noise_sigma must be finite and non-negative".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            if !(o.size.0 > 0.0 && o.size.1 > 0.0 && o.growth > 0.0) {
                return fail(format!("object {i} has non-positive size or growth"));
            }
            if o.degrade.iter().any(|w| !(0.0..1.0).contains(&w.gain) || w.end <= w.start) {
                return fail(format!("object {i} has an invalid degrade window"));
            }
        }
        Ok(())
    }

    /// Shot index of a frame.
    pub fn shot_of(&self, frame: u32) -> usize {
        self.shot_cuts.iter().take_while(|&&c| c <= frame).count()
    }

    fn shot_start(&self, shot: usize) -> u32 {
        if shot == 0 {
            0
        } else {
            self.shot_cuts[shot - 1]
        }
    }
}

fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag.wrapping_mul(0x9e37_79b9).wrapping_add(index));
    rng
}

const TAG_NOISE: u64 = 1;
const TAG_HIST: u64 = 2;
const TAG_APPEARANCE: u64 = 3;
const TAG_RELOCATE: u64 = 4;
const TAG_LAYOUT: u64 = 5;
const TAG_DEGRADE: u64 = 6;

/// Initial appearance vectors and their drift planes.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceModel {
    pub base: Vec<Vec<f32>>,
    pub plane: Vec<Vec<f32>>,
    pub drift_rate: f64,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn orthonormalize(mut v: Vec<f64>, against: &[Vec<f64>]) -> Option<Vec<f64>> {
    for u in against {
        let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        for (a, b) in v.iter_mut().zip(u) {
            *a -= p * b;
        }
    }
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (n > 1e-9).then(|| v.into_iter().map(|a| a / n).collect())
}

impl AppearanceModel {
    pub fn new(n_objects: usize, dim: usize, drift_rate: f64, seed: u64) -> Self {
        let mut rng = stream(seed, TAG_APPEARANCE, 0);
        let mut base: Vec<Vec<f64>> = Vec::with_capacity(n_objects);
        let mut plane = Vec::with_capacity(n_objects);
        for i in 0..n_objects {
            // distinct objects start mutually orthogonal while the dimension allows
            let a = loop {
                let against = if i < dim { &base[..] } else { &[][..] };
                if let Some(a) = orthonormalize(gaussian_vec(&mut rng, dim), against) {
                    break a;
                }
            };
            let v = loop {
                if let Some(v) = orthonormalize(gaussian_vec(&mut rng, dim), std::slice::from_ref(&a)) {
                    break v;
                }
            };
            base.push(a);
            plane.push(v);
        }
        let to32 = |v: Vec<Vec<f64>>| v.into_iter().map(|x| x.into_iter().map(|a| a as f32).collect()).collect();
        AppearanceModel {
            base: to32(base),
            plane: to32(plane),
            drift_rate,
        }
    }

    /// Unit appearance of an object at a frame.
    pub fn at(&self, object: usize, frame: u32) -> Vec<f32> {
        let theta = self.drift_rate * frame as f64;
        let (c, s) = (theta.cos(), theta.sin());
        self.base[object]
            .iter()
            .zip(&self.plane[object])
            .map(|(a, v)| (c * *a as f64 + s * *v as f64) as f32)
            .collect()
    }

    /// Analytic cosine between two frames of the same object.
    pub fn drift_cosine(&self, t0: u32, t1: u32) -> f64 {
        (self.drift_rate * (t1 as f64 - t0 as f64)).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtRecord {
    pub frame: u32,
    pub object_id: u32,
    pub bbox: BoundingBox,
    pub class_id: u32,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub records: Vec<GtRecord>,
}

impl GroundTruth {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn visible_in(&self, frame: u32) -> impl Iterator<Item = &GtRecord> {
        self.records.iter().filter(move |r| r.frame == frame && r.visible)
    }

    pub fn to_records(&self) -> Vec<DetectionRecord> {
        self.records
            .iter()
            .map(|r| DetectionRecord {
                frame: r.frame,
                id: r.object_id as i64,
                bbox: r.bbox,
                confidence: 1.0,
                class_id: r.class_id,
                visible: r.visible,
            })
            .collect()
    }

    pub fn from_records(records: &[DetectionRecord]) -> Result<Self> {
        let records = records
            .iter()
            .map(|r| {
                if r.id < 0 {
                    return Err(Error::Format {
                        offset: 0,
                        message: format!("ground truth row in frame {} has negative id", r.frame),
                    });
                }
                Ok(GtRecord {
                    frame: r.frame,
                    object_id: r.id as u32,
                    bbox: r.bbox,
                    class_id: r.class_id,
                    visible: r.visible,
                })
            })
            .collect::<Result<_>>()?;
        Ok(GroundTruth { records })
    }
}

fn reflect(p: f32, lo: f32, hi: f32) -> f32 {
    let span = hi - lo;
    if span <= 0.0 {
        return (lo + hi) * 0.5;
    }
    let m = (p - lo).rem_euclid(2.0 * span);
    lo + if m > span { 2.0 * span - m } else { m }
}

/// Ground-truth boxes of every object at every frame (present or not).
fn object_boxes(spec: &ScenarioSpec) -> Vec<Vec<BoundingBox>> {
    let frame = NOMINAL_FRAME_SIZE as f32;
    let n_shots = spec.shot_cuts.len() + 1;
    spec.objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let starts: Vec<(f32, f32)> = (0..n_shots)
                .map(|k| {
                    let t = spec.shot_start(k);
                    if k == 0 || !spec.relocate_on_cut {
                        (o.center.0 + o.velocity.0 * t as f32, o.center.1 + o.velocity.1 * t as f32)
                    } else {
                        let mut rng = stream(spec.seed, TAG_RELOCATE, (i * n_shots + k) as u64);
                        let w = o.size.0 * o.growth.powi(t as i32);
                        let lo = w.min(frame * 0.5 - 1.0);
                        (rng.random_range(lo..frame - lo), o.center.1 + o.velocity.1 * t as f32)
                    }
                })
                .collect();
            (0..spec.n_frames)
                .map(|t| {
                    let k = spec.shot_of(t);
                    let dt = (t - spec.shot_start(k)) as f32;
                    let g = o.growth.powi(t as i32);
                    let (w, h) = (o.size.0 * g, o.size.1 * g);
                    let x = reflect(starts[k].0 + o.velocity.0 * dt, w * 0.5, frame - w * 0.5);
                    let y = reflect(starts[k].1 + o.velocity.1 * dt, h * 0.5, frame - h * 0.5);
                    BoundingBox { cx: x, cy: y, w, h }
                })
                .collect()
        })
        .collect()
}

fn render_blob(map: &mut FeatureMap, stride: f32, bbox: &BoundingBox, appearance: &[f32], amp: f32) {
    let (h, w, c) = (map.height(), map.width(), map.channels());
    let (sx, sy) = (bbox.w as f64 / 4.0, bbox.h as f64 / 4.0);
    let s = stride as f64;
    let reach = 3.5;
    let x0 = (((bbox.cx as f64 - reach * sx) / s).floor().max(0.0)) as usize;
    let x1 = (((bbox.cx as f64 + reach * sx) / s).ceil().max(0.0) as usize).min(w);
    let y0 = (((bbox.cy as f64 - reach * sy) / s).floor().max(0.0)) as usize;
    let y1 = (((bbox.cy as f64 + reach * sy) / s).ceil().max(0.0) as usize).min(h);
    let vals = map.values_mut();
    for y in y0..y1 {
        let dy = ((y as f64 + 0.5) * s - bbox.cy as f64) / sy;
        for x in x0..x1 {
            let dx = ((x as f64 + 0.5) * s - bbox.cx as f64) / sx;
            let g = amp as f64 * (-(dx * dx + dy * dy) / 2.0).exp();
            for (ch, a) in appearance.iter().enumerate().take(c) {
                vals[(ch * h + y) * w + x] += (g * *a as f64) as f32;
            }
        }
    }
}

fn shot_histogram(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut hist = Vec::with_capacity(HIST_LEN);
    for _ in 0..3 {
        let raw: Vec<f64> = (0..HIST_BINS).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let sum: f64 = raw.iter().sum();
        hist.extend(raw.into_iter().map(|v| v / sum));
    }
    hist
}

fn jitter_histogram(base: &[f64], rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut out = Vec::with_capacity(HIST_LEN);
    for chan in base.chunks(HIST_BINS) {
        let j: Vec<f64> = chan.iter().map(|v| v * rng.random_range(0.98..1.02)).collect();
        let sum: f64 = j.iter().sum();
        out.extend(j.into_iter().map(|v| (v / sum) as f32));
    }
    out
}

/// Stand-in classifier: a candidate takes the class of the nearest visible
/// object whose box contains its center, otherwise keeps the extractor label.
fn label_candidates(cands: &mut [Detection], spec: &ScenarioSpec, boxes: &[Vec<BoundingBox>], t: u32) {
    for d in cands {
        let mut best: Option<(f64, u32)> = None;
        for (i, obj) in spec.objects.iter().enumerate() {
            let b = boxes[i][t as usize];
            if !obj.is_present(t) {
                continue;
            }
            let (x0, y0, x1, y1) = b.corners();
            let (cx, cy) = (d.bbox.cx as f64, d.bbox.cy as f64);
            if cx < x0 || cx > x1 || cy < y0 || cy > y1 {
                continue;
            }
            let dist = (cx - b.cx as f64).powi(2) + (cy - b.cy as f64).powi(2);
            if best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, obj.class_id));
            }
        }
        if let Some((_, class_id)) = best {
            d.class_id = class_id;
        }
    }
}

/// Render a scenario into frame bundles and the matching ground truth.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<(Vec<FrameBundle>, GroundTruth)> {
    spec.validate()?;
    let appearance = AppearanceModel::new(spec.n_objects(), spec.appearance_dim, spec.drift_rate, spec.seed);
    let boxes = object_boxes(spec);
    let (h0, w0) = nominal_level0();
    let c = spec.appearance_dim;
    let extractor = CandidateExtractor::default();

    let mut frames = Vec::with_capacity(spec.n_frames as usize);
    let mut gt = GroundTruth::default();
    let mut noise_rng = stream(spec.seed, TAG_NOISE, 0);
    let mut hist_rng = stream(spec.seed, TAG_HIST, 0);
    let mut hist_base = Vec::new();
    for t in 0..spec.n_frames {
        let shot = spec.shot_of(t);
        if t == spec.shot_start(shot) {
            // re-seed background and palette at every cut
            noise_rng = stream(spec.seed, TAG_NOISE, shot as u64);
            hist_rng = stream(spec.seed, TAG_HIST, shot as u64);
            hist_base = shot_histogram(&mut hist_rng);
        }
        let mut pyramid: Vec<FeatureMap> = (0..3)
            .map(|l| {
                let (h, w) = level_dims(h0, w0, l);
                let mut m = FeatureMap::zeros(c, h, w);
                if spec.noise_sigma > 0.0 {
                    for v in m.values_mut() {
                        *v = (spec.noise_sigma * noise_rng.sample::<f64, _>(StandardNormal)) as f32;
                    }
                }
                m
            })
            .collect();
        for (i, obj) in spec.objects.iter().enumerate() {
            let present = obj.is_present(t);
            let bbox = boxes[i][t as usize];
            gt.records.push(GtRecord {
                frame: t,
                object_id: i as u32,
                bbox,
                class_id: obj.class_id,
                visible: present,
            });
            if !present {
                continue;
            }
            let a = appearance.at(i, t);
            let amp = spec.amplitude * obj.gain(t);
            for (l, map) in pyramid.iter_mut().enumerate() {
                render_blob(map, level_stride(l), &bbox, &a, amp);
            }
        }
        let mut candidates = extractor.extract_plain(&pyramid[0], t);
        label_candidates(&mut candidates, spec, &boxes, t);
        let mut it = pyramid.into_iter();
        frames.push(FrameBundle {
            frame_index: t,
            pyramid: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
            candidates,
            rgb_histogram: jitter_histogram(&hist_base, &mut hist_rng),
        });
    }
    Ok((frames, gt))
}

/// Face provider backed by the scenario's ground truth: a box overlapping a
/// visible object whose face flag is set yields that object's appearance.
#[derive(Debug, Clone)]
pub struct SyntheticFaces {
    spec: ScenarioSpec,
    appearance: AppearanceModel,
    gt: GroundTruth,
}

impl SyntheticFaces {
    pub fn new(spec: &ScenarioSpec, gt: &GroundTruth) -> Self {
        SyntheticFaces {
            spec: spec.clone(),
            appearance: AppearanceModel::new(spec.n_objects(), spec.appearance_dim, spec.drift_rate, spec.seed),
            gt: gt.clone(),
        }
    }

    pub fn appearance(&self) -> &AppearanceModel {
        &self.appearance
    }
}

const FACE_IOU: f64 = 0.3;

impl FaceProvider for SyntheticFaces {
    fn face_features(&self, frame: &FrameBundle, bbox: &BoundingBox) -> Option<Vec<f32>> {
        let best = self
            .gt
            .visible_in(frame.frame_index)
            .map(|r| (r.object_id as usize, iou(&r.bbox, bbox)))
            .filter(|(_, v)| *v >= FACE_IOU)
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        self.spec.objects[best.0]
            .face_visible
            .then(|| self.appearance.at(best.0, frame.frame_index))
    }
}

/// Cosine between two appearance vectors (test and oracle helper).
pub fn appearance_cosine(a: &[f32], b: &[f32]) -> f64 {
    dot(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::HIST_BINS;

    fn l1(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs() as f64).sum()
    }

    #[test]
    fn empty_scene() {
        let spec = ScenarioSpec::random(0, 5, vec![], 8, 1);
        let (frames, gt) = generate_scenario(&spec).unwrap();
        assert_eq!(frames.len(), 5);
        assert!(frames.iter().all(|f| f.candidates.is_empty()));
        assert!(gt.is_empty());
    }

    #[test]
    fn deterministic() {
        let spec = ScenarioSpec::random(3, 6, vec![3], 8, 42);
        let a = generate_scenario(&spec).unwrap();
        let b = generate_scenario(&spec).unwrap();
        assert_eq!(a, b);
        let enc = |f: &[FrameBundle]| crate::providers::binfmt::encode_frames(f).unwrap();
        assert_eq!(enc(&a.0), enc(&b.0));
        let other = generate_scenario(&ScenarioSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn static_blob_peak_at_center() {
        let mut spec = ScenarioSpec::random(1, 6, vec![], 8, 5);
        spec.noise_sigma = 0.0;
        spec.objects[0].velocity = (0.0, 0.0);
        let (frames, gt) = generate_scenario(&spec).unwrap();
        for f in &frames {
            let g = gt.visible_in(f.frame_index).next().unwrap();
            assert_eq!(f.candidates.len(), 1);
            let d = f.candidates[0];
            assert!((d.bbox.cx - g.bbox.cx).abs() <= 8.0 && (d.bbox.cy - g.bbox.cy).abs() <= 8.0);
        }
    }

    #[test]
    fn blob_fidelity_moving_objects() {
        let mut spec = ScenarioSpec::random(4, 30, vec![15], 8, 9);
        spec.noise_sigma = 0.0;
        let (frames, gt) = generate_scenario(&spec).unwrap();
        for f in &frames {
            for g in gt.visible_in(f.frame_index) {
                let hit = f.candidates.iter().any(|d| {
                    (d.bbox.cx - g.bbox.cx).abs() <= 8.0 && (d.bbox.cy - g.bbox.cy).abs() <= 8.0
                });
                assert!(hit, "frame {} object {}", f.frame_index, g.object_id);
            }
        }
    }

    #[test]
    fn pyramid_and_histogram_invariants() {
        let spec = ScenarioSpec::random(2, 4, vec![2], 8, 3);
        let (frames, _) = generate_scenario(&spec).unwrap();
        for f in &frames {
            f.validate().unwrap();
            assert_eq!(f.pyramid[0].height(), 76);
            assert_eq!(f.pyramid[1].height(), 38);
            assert_eq!(f.pyramid[2].width(), 19);
            for chan in f.rgb_histogram.chunks(HIST_BINS) {
                let s: f64 = chan.iter().map(|&v| v as f64).sum();
                assert!((s - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn histogram_separation_across_cuts() {
        for seed in 0..20 {
            let spec = ScenarioSpec::random(2, 30, vec![10, 21], 4, seed);
            let (frames, _) = generate_scenario(&spec).unwrap();
            let mut within = 0f64;
            let mut across = f64::INFINITY;
            for t in 1..frames.len() {
                let d = l1(&frames[t - 1].rgb_histogram, &frames[t].rgb_histogram);
                if spec.shot_cuts.contains(&(t as u32)) {
                    across = across.min(d);
                } else {
                    within = within.max(d);
                }
            }
            assert!(across > within, "seed {seed}: across {across} within {within}");
        }
    }

    #[test]
    fn drift_is_an_analytic_rotation() {
        let m = AppearanceModel::new(3, 8, 0.05, 7);
        for obj in 0..3 {
            let a0 = m.at(obj, 0);
            for t in [1, 10, 31] {
                let cos = appearance_cosine(&a0, &m.at(obj, t));
                assert!((cos - (0.05 * t as f64).cos()).abs() < 1e-6);
            }
        }
        assert!(appearance_cosine(&m.at(0, 0), &m.at(1, 0)).abs() < 1e-6);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = ScenarioSpec::random(1, 10, vec![5, 5], 4, 0);
        assert!(matches!(generate_scenario(&spec), Err(Error::Config(_))));
        spec.shot_cuts = vec![10];
        assert!(generate_scenario(&spec).is_err());
        spec.shot_cuts = vec![0];
        assert!(generate_scenario(&spec).is_err());
        spec.shot_cuts = vec![];
        spec.objects[0].degrade.push(DegradeWindow { start: 1, end: 3, gain: 1.0 });
        assert!(generate_scenario(&spec).is_err());
    }

    #[test]
    fn faces_follow_flags() {
        let mut spec = ScenarioSpec::random(2, 3, vec![], 6, 4);
        spec.objects[0].face_visible = true;
        let (frames, gt) = generate_scenario(&spec).unwrap();
        let faces = SyntheticFaces::new(&spec, &gt);
        let f = &frames[1];
        let b0 = gt.visible_in(1).find(|r| r.object_id == 0).unwrap().bbox;
        let b1 = gt.visible_in(1).find(|r| r.object_id == 1).unwrap().bbox;
        assert_eq!(faces.face_features(f, &b0).map(|v| v.len()), Some(6));
        assert_eq!(faces.face_features(f, &b1), None);
        let nowhere = BoundingBox { cx: 3.0, cy: 3.0, w: 4.0, h: 4.0 };
        assert_eq!(faces.face_features(f, &nowhere), None);
    }
}
