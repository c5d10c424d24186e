//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr before asserting, so `cargo test -- --nocapture` is not needed to
//! see the summary.

#![allow(clippy::needless_range_loop)]

use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svreid_core::eval::{average_precision, clear_mot, detection_recall, gt_detections, rank_k_scores};
use svreid_core::pipeline::{fuse_video, replay, run_pipeline, run_to_dir};
use svreid_core::providers::scenario::{GroundTruth, GtRecord};
use svreid_core::providers::{decode_frames, encode_frames, generate_scenario, save_frames, NoFaces, ScenarioSpec, TrackRecord};
use svreid_core::reid::{Identity, QuerySet};
use svreid_core::tifn::{promote_to_global, xcorr, CandidatePool, GlobalSet, PoolEvent};
use svreid_core::tracker::{
    cpsn_similarity, hungarian_assign, kalman_predict, kalman_update, pointwise_response, topk_mean, KalmanState,
    ResponseMap,
};
use svreid_core::{BoundingBox, Detection, FeatureCrop, FeatureMap, PipelineConfig, SpatialInfo};

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "acceptance {id} {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
}

/// Serializes the pipeline-heavy tests so their timings are not shared
/// with each other on small machines.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_map(r: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> FeatureMap {
    let v = (0..c * h * w).map(|_| r.random_range(-1.0f32..1.0)).collect();
    FeatureMap::new(c, h, w, v).unwrap()
}

/// Random map with both sides drawn from `sides`.
fn sized_map(r: &mut ChaCha8Rng, c: usize, sides: std::ops::Range<usize>) -> FeatureMap {
    let (h, w) = (r.random_range(sides.clone()), r.random_range(sides));
    random_map(r, c, h, w)
}

fn crop_of(data: FeatureMap, confidence: f32) -> FeatureCrop {
    FeatureCrop {
        spatial: SpatialInfo {
            cx: data.width() as f32 / 2.0,
            cy: data.height() as f32 / 2.0,
            w: data.width() as f32,
            h: data.height() as f32,
            frame_index: 0,
            confidence,
            scale_level: 0,
        },
        data,
    }
}

/// Cells of a map as unit f64 vectors, row-major.
fn unit_cells(m: &FeatureMap) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for y in 0..m.height() {
        for x in 0..m.width() {
            let v: Vec<f64> = (0..m.channels()).map(|c| m.get(c, y, x) as f64).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            out.push(if n > 0.0 { v.iter().map(|a| a / n).collect() } else { vec![0.0; v.len()] });
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------- criterion 1

fn xcorr_oracle(crop: &FeatureMap, map: &FeatureMap) -> Vec<f64> {
    let (ch, cw, mh, mw) = (crop.height(), crop.width(), map.height(), map.width());
    let (cu, mu) = (unit_cells(crop), unit_cells(map));
    let mut out = vec![0.0; mh * mw];
    for y in 0..=mh - ch {
        for x in 0..=mw - cw {
            let mut s = 0.0;
            for dy in 0..ch {
                for dx in 0..cw {
                    s += dot(&cu[dy * cw + dx], &mu[(y + dy) * mw + x + dx]);
                }
            }
            let (oy, ox) = (y + (ch - 1) / 2, x + (cw - 1) / 2);
            out[oy * mw + ox] = (s / (ch * cw) as f64).clamp(-1.0, 1.0);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Textbook constant-velocity filter on plain arrays.
struct TextbookKalman {
    x: [f64; 8],
    p: [[f64; 8]; 8],
}

fn matmul<const A: usize, const B: usize, const C: usize>(a: &[[f64; B]; A], b: &[[f64; C]; B]) -> [[f64; C]; A] {
    let mut o = [[0.0; C]; A];
    for i in 0..A {
        for j in 0..C {
            o[i][j] = (0..B).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    o
}

fn transpose<const A: usize, const B: usize>(a: &[[f64; B]; A]) -> [[f64; A]; B] {
    let mut o = [[0.0; A]; B];
    for i in 0..A {
        for j in 0..B {
            o[j][i] = a[i][j];
        }
    }
    o
}

fn gauss_jordan_inverse(m: [[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut a = m;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..4 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..4 {
            if r != col {
                let f = a[r][col];
                for j in 0..4 {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

impl TextbookKalman {
    const P: f64 = 1.0 / 20.0;
    const V: f64 = 1.0 / 160.0;

    fn new(z: [f64; 4]) -> Self {
        let h = z[3];
        let sd = [
            2.0 * Self::P * h,
            2.0 * Self::P * h,
            1e-2,
            2.0 * Self::P * h,
            10.0 * Self::V * h,
            10.0 * Self::V * h,
            1e-5,
            10.0 * Self::V * h,
        ];
        let mut p = [[0.0; 8]; 8];
        for i in 0..8 {
            p[i][i] = sd[i] * sd[i];
        }
        let mut x = [0.0; 8];
        x[..4].copy_from_slice(&z);
        TextbookKalman { x, p }
    }

    fn f() -> [[f64; 8]; 8] {
        let mut f = [[0.0; 8]; 8];
        for i in 0..8 {
            f[i][i] = 1.0;
        }
        for i in 0..4 {
            f[i][i + 4] = 1.0;
        }
        f
    }

    fn h() -> [[f64; 8]; 4] {
        let mut h = [[0.0; 8]; 4];
        for i in 0..4 {
            h[i][i] = 1.0;
        }
        h
    }

    fn predict(&mut self) {
        let h = self.x[3];
        let sd = [Self::P * h, Self::P * h, 1e-2, Self::P * h, Self::V * h, Self::V * h, 1e-5, Self::V * h];
        let f = Self::f();
        let mut x = [0.0; 8];
        for i in 0..8 {
            x[i] = (0..8).map(|k| f[i][k] * self.x[k]).sum();
        }
        let mut p = matmul(&matmul(&f, &self.p), &transpose(&f));
        for i in 0..8 {
            p[i][i] += sd[i] * sd[i];
        }
        self.x = x;
        self.p = p;
    }

    fn update(&mut self, z: [f64; 4]) {
        let hgt = self.x[3];
        let r = [Self::P * hgt, Self::P * hgt, 1e-1, Self::P * hgt];
        let hm = Self::h();
        let pht = matmul(&self.p, &transpose(&hm));
        let mut s = matmul(&hm, &pht);
        for i in 0..4 {
            s[i][i] += r[i] * r[i];
        }
        let k = matmul(&pht, &gauss_jordan_inverse(s));
        let y: Vec<f64> = (0..4).map(|i| z[i] - self.x[i]).collect();
        for i in 0..8 {
            self.x[i] += (0..4).map(|j| k[i][j] * y[j]).sum::<f64>();
        }
        let kh = matmul(&k, &hm);
        let mut ikh = [[0.0; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                ikh[i][j] = if i == j { 1.0 } else { 0.0 } - kh[i][j];
            }
        }
        self.p = matmul(&ikh, &self.p);
    }

    fn max_diff(&self, s: &KalmanState) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..8 {
            d = d.max((self.x[i] - s.mean[i]).abs());
            for j in 0..8 {
                d = d.max((self.p[i][j] - s.covariance[(i, j)]).abs());
            }
        }
        d
    }
}

#[test]
fn c1_oracle_equivalence() {
    let _guard = heavy();
    let start = Instant::now();
    let mut r = rng(1);

    let mut xc_err: f64 = 0.0;
    for _ in 0..100 {
        let c = r.random_range(1..17);
        let (mh, mw) = (r.random_range(4..20), r.random_range(4..20));
        let (ch, cw) = (r.random_range(1..=mh.min(7)), r.random_range(1..=mw.min(7)));
        let map = random_map(&mut r, c, mh, mw);
        let crop = random_map(&mut r, c, ch, cw);
        let want = xcorr_oracle(&crop, &map);
        let got = xcorr(&crop_of(crop, 1.0), &map).unwrap();
        assert_eq!((got.height, got.width), (mh, mw));
        for (g, w) in got.values.iter().zip(&want) {
            xc_err = xc_err.max((*g as f64 - w).abs());
        }
    }

    let mut pr_err: f64 = 0.0;
    for _ in 0..100 {
        let c = r.random_range(1..17);
        let d = sized_map(&mut r, c, 1..8);
        let t = sized_map(&mut r, c, 1..8);
        let (du, tu) = (unit_cells(&d), unit_cells(&t));
        let got = pointwise_response(&crop_of(d, 1.0), &crop_of(t, 1.0)).unwrap();
        assert_eq!((got.rows, got.cols), (du.len(), tu.len()));
        for (i, a) in du.iter().enumerate() {
            for (j, b) in tu.iter().enumerate() {
                pr_err = pr_err.max((got.get(i, j) as f64 - dot(a, b).clamp(-1.0, 1.0)).abs());
            }
        }
    }

    let perms = permutations(5);
    let mut hung_mismatch = 0;
    for _ in 0..100 {
        // eighths keep every row-ordered sum exact
        let cost: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..5).map(|_| r.random_range(0..800) as f64 / 8.0).collect())
            .collect();
        let brute = perms
            .iter()
            .map(|p| (0..5).map(|i| cost[i][p[i]]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let pairs = hungarian_assign(&cost);
        let got: f64 = pairs.iter().map(|&(i, j)| cost[i][j]).sum();
        if pairs.len() != 5 || got != brute {
            hung_mismatch += 1;
        }
    }

    // scripted trajectory: constant drift with a deterministic wobble
    let boxes: Vec<BoundingBox> = (0..=50)
        .map(|t| {
            let t = t as f32;
            BoundingBox::new(
                120.0 + 3.0 * t + 4.0 * (0.7 * t).sin(),
                200.0 - 1.5 * t + 3.0 * (0.3 * t).cos(),
                40.0 + 0.2 * t + (0.5 * t).sin(),
                80.0 + 0.4 * t + 2.0 * (0.9 * t).cos(),
            )
            .unwrap()
        })
        .collect();
    let z = |b: &BoundingBox| [b.cx as f64, b.cy as f64, b.w as f64 / b.h as f64, b.h as f64];
    let mut ours = KalmanState::initiate(&boxes[0]);
    let mut book = TextbookKalman::new(z(&boxes[0]));
    let mut kf_err = book.max_diff(&ours);
    for b in &boxes[1..] {
        ours = kalman_predict(&ours).unwrap();
        book.predict();
        kf_err = kf_err.max(book.max_diff(&ours));
        ours = kalman_update(&ours, b).unwrap();
        book.update(z(b));
        kf_err = kf_err.max(book.max_diff(&ours));
    }

    let secs = start.elapsed().as_secs_f64();
    let ok = xc_err < 1e-5 && pr_err < 1e-5 && hung_mismatch == 0 && kf_err < 1e-6 && secs < 10.0;
    report(
        1,
        "oracle equivalence",
        ok,
        &format!("xcorr {xc_err:.2e}, response {pr_err:.2e}, hungarian mismatches {hung_mismatch}, kalman {kf_err:.2e}, {secs:.2}s"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- criterion 2

/// Reference pool entry: prototype id stands in for the signature.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ModelEntry {
    proto: usize,
    frequency: u32,
    confidence: f32,
}

fn model_of(entries: &[svreid_core::tifn::PoolEntry], protos: &[Vec<f32>]) -> Vec<ModelEntry> {
    entries
        .iter()
        .map(|e| ModelEntry {
            proto: proto_of(e.signature(), protos),
            frequency: e.frequency,
            confidence: e.confidence,
        })
        .collect()
}

fn proto_of(sig: &[f32], protos: &[Vec<f32>]) -> usize {
    let s: Vec<f64> = sig.iter().map(|v| *v as f64).collect();
    let n = dot(&s, &s).sqrt();
    (0..protos.len())
        .find(|&i| {
            let p: Vec<f64> = protos[i].iter().map(|v| *v as f64).collect();
            (dot(&s, &p) / (n * dot(&p, &p).sqrt()) - 1.0).abs() < 1e-6
        })
        .expect("signature is a scaled prototype")
}

#[test]
fn c2_pool_rule_table() {
    let _guard = heavy();
    let start = Instant::now();
    let mut r = rng(2);
    // axis directions: pairwise cosine 0, self cosine 1, nothing near the threshold
    let dim = 6;
    let protos: Vec<Vec<f32>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let threshold = 0.7;

    let mut violations = Vec::new();
    let mut counts = [0usize; 5];
    let mut pool = CandidatePool::new(4);
    let mut global = GlobalSet::new(3);
    for op in 0..10_000 {
        if r.random_bool(0.8) {
            let n = r.random_range(1..4);
            let mut batch = Vec::new();
            let mut meta = Vec::new();
            for _ in 0..n {
                let proto = r.random_range(0..dim);
                let scale = r.random_range(0.5f32..2.0);
                let conf = r.random_range(0.0f32..1.0);
                let v: Vec<f32> = protos[proto].iter().map(|x| x * scale).collect();
                batch.push(crop_of(FeatureMap::new(dim, 1, 1, v).unwrap(), conf));
                meta.push((proto, conf));
            }
            let mut model = model_of(pool.entries(), &protos);
            let events = pool.update(batch, threshold);
            for (&(proto, conf), ev) in meta.iter().zip(&events) {
                let matched = model.iter().position(|e| e.proto == proto);
                let room = model.len() < pool.capacity();
                let lowest = (0..model.len()).fold(None, |b: Option<usize>, i| match b {
                    Some(j) if model[j].confidence <= model[i].confidence => Some(j),
                    _ => Some(i),
                });
                // preconditions of the three rules and the no-op
                let rules = [
                    matched.is_some(),
                    matched.is_none() && room,
                    matched.is_none() && !room && lowest.is_some_and(|l| conf > model[l].confidence),
                    matched.is_none() && !room && lowest.is_none_or(|l| conf <= model[l].confidence),
                ];
                if rules.iter().filter(|x| **x).count() != 1 {
                    violations.push(format!("op {op}: {} rules apply", rules.iter().filter(|x| **x).count()));
                }
                let expected = if let Some(i) = matched {
                    let replaced = conf > model[i].confidence;
                    model[i].frequency += 1;
                    if replaced {
                        model[i].confidence = conf;
                    }
                    PoolEvent::Matched { index: i, crop_replaced: replaced }
                } else if room {
                    model.push(ModelEntry { proto, frequency: 1, confidence: conf });
                    PoolEvent::Appended { index: model.len() - 1 }
                } else if rules[2] {
                    let l = lowest.unwrap();
                    model[l] = ModelEntry { proto, frequency: 1, confidence: conf };
                    PoolEvent::ReplacedLowest { index: l }
                } else {
                    PoolEvent::Discarded
                };
                counts[match expected {
                    PoolEvent::Matched { .. } => 0,
                    PoolEvent::Appended { .. } => 1,
                    PoolEvent::ReplacedLowest { .. } => 2,
                    PoolEvent::Discarded => 3,
                }] += 1;
                if *ev != expected {
                    violations.push(format!("op {op}: got {ev:?}, rule table says {expected:?}"));
                }
            }
            if model_of(pool.entries(), &protos) != model {
                violations.push(format!("op {op}: pool state diverged from the rule table"));
            }
        } else {
            let gamma = r.random_range(1..5);
            let before_pool = model_of(pool.entries(), &protos);
            let mut want_global = model_of(global.entries(), &protos);
            let mut want_pool = Vec::new();
            for e in before_pool {
                if e.frequency <= gamma {
                    want_pool.push(e);
                } else if want_global.len() < global.capacity() {
                    want_global.push(e);
                    counts[4] += 1;
                } else {
                    let l = (0..want_global.len())
                        .fold(0, |b, i| if want_global[i].confidence < want_global[b].confidence { i } else { b });
                    if e.confidence > want_global[l].confidence && e.frequency > want_global[l].frequency {
                        want_global[l] = e;
                        counts[4] += 1;
                    } else {
                        want_pool.push(e);
                    }
                }
            }
            (pool, global) = promote_to_global(pool, global, gamma);
            if model_of(pool.entries(), &protos) != want_pool || model_of(global.entries(), &protos) != want_global {
                violations.push(format!("op {op}: promotion with gamma {gamma} disagrees with the rule"));
            }
        }
        if pool.len() > pool.capacity() || global.len() > global.capacity() {
            violations.push(format!("op {op}: capacity exceeded"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    // every rule must actually have been exercised
    let ok = violations.is_empty() && counts.iter().all(|c| *c > 0) && secs < 5.0;
    report(
        2,
        "pool rule table",
        ok,
        &format!(
            "match {} append {} replace {} discard {} promote {}, {} violations, {secs:.2}s",
            counts[0],
            counts[1],
            counts[2],
            counts[3],
            counts[4],
            violations.len()
        ),
    );
    assert!(ok, "{:?}", &violations[..violations.len().min(5)]);
}

// ---------------------------------------------------------------- criterion 3

/// Two-level crop where every coarse cell copies a fine cell, so each scale
/// pair has at least as many exact matches as any top-k needs.
fn pyramid_crops(r: &mut ChaCha8Rng, c: usize) -> Vec<FeatureCrop> {
    let (h, w) = (2 * r.random_range(1..5), 2 * r.random_range(1..5));
    let fine = random_map(r, c, h, w);
    let mut coarse = vec![0f32; c * (h / 2) * (w / 2)];
    for ch in 0..c {
        for y in 0..h / 2 {
            for x in 0..w / 2 {
                coarse[(ch * (h / 2) + y) * (w / 2) + x] = fine.get(ch, 2 * y, 2 * x);
            }
        }
    }
    vec![crop_of(fine, 1.0), crop_of(FeatureMap::new(c, h / 2, w / 2, coarse).unwrap(), 1.0)]
}

#[test]
fn c3_cpsn_identities() {
    let mut r = rng(3);
    let (mut self_err, mut sym_err, mut topk_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..100 {
        let c = r.random_range(2..12);
        let x = if i % 2 == 0 {
            vec![crop_of(sized_map(&mut r, c, 1..7), 1.0)]
        } else {
            pyramid_crops(&mut r, c)
        };
        // an explicit k may not exceed the exact matches of the coarsest pair
        let coarse = x.last().unwrap().data.cells();
        let k = r.random_range(0..=coarse.min(3));
        self_err = self_err.max((cpsn_similarity(&x, &x, k).unwrap() - 1.0).abs());

        let a = vec![crop_of(sized_map(&mut r, c, 1..7), 1.0)];
        let b = vec![
            crop_of(sized_map(&mut r, c, 1..7), 1.0),
            crop_of(sized_map(&mut r, c, 1..4), 1.0),
        ];
        sym_err = sym_err.max((cpsn_similarity(&a, &b, k).unwrap() - cpsn_similarity(&b, &a, k).unwrap()).abs());

        // lower every entry outside the top k; the top-k mean must not move
        let resp = pointwise_response(&a[0], &b[0]).unwrap();
        let k = r.random_range(1..=resp.values.len());
        let mut sorted = resp.values.clone();
        sorted.sort_by(|p, q| q.total_cmp(p));
        let kth = sorted[k - 1];
        let mut keep = sorted.iter().filter(|v| **v == kth).count() - sorted[..k].iter().filter(|v| **v == kth).count();
        let values = resp
            .values
            .iter()
            .map(|v| {
                if *v < kth {
                    v - r.random_range(0.0f32..1.0)
                } else if *v == kth && keep > 0 {
                    keep -= 1;
                    kth - r.random_range(0.0f32..1.0)
                } else {
                    *v
                }
            })
            .collect();
        let moved = ResponseMap { values, ..resp.clone() };
        topk_err = topk_err.max((topk_mean(&resp, k).unwrap() - topk_mean(&moved, k).unwrap()).abs());
    }
    let ok = self_err <= 1e-6 && sym_err <= 1e-9 && topk_err <= 1e-9;
    report(
        3,
        "cpsn identities",
        ok,
        &format!("self {self_err:.2e}, symmetry {sym_err:.2e}, top-k perturbation {topk_err:.2e}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn c4_easy_tracking() {
    let _guard = heavy();
    let start = Instant::now();
    let spec = ScenarioSpec::random(3, 200, vec![], 16, 4);
    let (frames, gt) = generate_scenario(&spec).unwrap();
    let out = run_pipeline(&frames, &NoFaces, &PipelineConfig::default(), false).unwrap();
    let m = clear_mot(&gt, &out.track_records(), 0.5).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = m.mota >= 0.95 && m.ids == 0 && secs < 30.0;
    report(
        4,
        "easy tracking",
        ok,
        &format!("MOTA {:.4} FP {} FN {} IDS {} of {}, {secs:.1}s", m.mota, m.fp, m.fn_, m.ids, m.gt_total),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn c5_cross_shot_identity() {
    let _guard = heavy();
    let mut spec = ScenarioSpec::random(3, 60, vec![30], 16, 5);
    spec.drift_rate = 0.01;
    let cfg = PipelineConfig::default();
    // cos over the whole video stays above the link threshold
    assert!((spec.drift_rate * spec.n_frames as f64).cos() > cfg.link_threshold);
    let (frames, _) = generate_scenario(&spec).unwrap();
    let out = run_pipeline(&frames, &NoFaces, &cfg, false).unwrap();
    let trajs = &out.link.trajectories;
    let spanning = trajs
        .iter()
        .filter(|t| {
            let shots: std::collections::BTreeSet<u32> = t.tracklets.iter().map(|k| k.shot_id).collect();
            shots.len() == 2
        })
        .count();
    let ok = out.shots.cuts == vec![30] && trajs.len() == 3 && spanning == 3;
    report(
        5,
        "cross-shot identity",
        ok,
        &format!("cuts {:?}, {} trajectories, {spanning} span both shots", out.shots.cuts, trajs.len()),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- criterion 6

fn ablation(ls: bool, ll: bool, gs: bool) -> PipelineConfig {
    PipelineConfig { attn_ls: ls, attn_ll: ll, attn_gs: gs, ..PipelineConfig::default() }
}

#[test]
fn c6_fusion_ablation_direction() {
    let _guard = heavy();
    let variants = [ablation(false, false, false), ablation(true, false, false), ablation(true, true, true)];
    let mut recalls = Vec::new();
    for seed in 0..20u64 {
        let spec = ScenarioSpec::random(3, 24, vec![], 16, 600 + seed).with_random_degradation(2, 5, 0.15);
        let (frames, gt) = generate_scenario(&spec).unwrap();
        let truth = gt_detections(&gt);
        let row: Vec<f64> = variants
            .iter()
            .map(|cfg| {
                let fused: Vec<Detection> = fuse_video(&frames, cfg, false).unwrap().fused.concat();
                detection_recall(&truth, &fused, 0.5).unwrap()
            })
            .collect();
        recalls.push(row);
    }
    let mean = |i: usize| recalls.iter().map(|r| r[i]).sum::<f64>() / recalls.len() as f64;
    let holds = |lo: usize, hi: usize| recalls.iter().filter(|r| r[hi] >= r[lo]).count();
    let (ls_ok, all_ok) = (holds(0, 1), holds(1, 2));
    let ok = mean(1) >= mean(0) && mean(2) >= mean(1) && ls_ok >= 15 && all_ok >= 15;
    report(
        6,
        "fusion ablation direction",
        ok,
        &format!(
            "mean recall base {:.4} +ls {:.4} all {:.4}; seeds non-regressing {ls_ok}/20 and {all_ok}/20",
            mean(0),
            mean(1),
            mean(2)
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- criterion 7

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn gaussian(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| r.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}

/// Rank-1 of chronologically processed gallery items against `ids`
/// identities, with and without growing the query banks.
fn query_update_rank1(seed: u64) -> (f64, f64) {
    const IDS: usize = 8;
    const SHOTS: usize = 6;
    const DIM: usize = 32;
    const STEP: f64 = 0.35;
    let cfg = PipelineConfig::default();
    let mut r = rng(700 + seed);
    let mut seeds = Vec::new();
    let mut planes = Vec::new();
    for _ in 0..IDS {
        let a = unit(gaussian(&mut r, DIM));
        let g = gaussian(&mut r, DIM);
        let ga = dot(&g, &a);
        let b = unit(g.iter().zip(&a).map(|(x, y)| x - ga * y).collect());
        seeds.push(a);
        planes.push(b);
    }
    let mut gallery = Vec::new();
    let mut labels = Vec::new();
    for shot in 1..=SHOTS {
        let theta = STEP * shot as f64;
        for id in 0..IDS {
            let noise = gaussian(&mut r, DIM);
            let v: Vec<f32> = (0..DIM)
                .map(|j| (theta.cos() * seeds[id][j] + theta.sin() * planes[id][j] + 0.08 * noise[j]) as f32)
                .collect();
            gallery.push(v);
            labels.push(id as u32);
        }
    }
    let ids: Vec<u32> = (0..IDS as u32).collect();
    let run = |update: bool| {
        let mut q = QuerySet::new(
            seeds
                .iter()
                .enumerate()
                .map(|(i, s)| Identity::new(i as u32, s.iter().map(|v| *v as f32).collect()))
                .collect(),
        );
        let mut scores = Vec::new();
        for (i, g) in gallery.iter().enumerate() {
            scores.push(q.identities.iter().map(|id| Some(id.similarity(g, None))).collect());
            if update {
                q.update(g, Some(i), cfg.query_match_threshold, cfg.query_update_delta);
            }
        }
        rank_k_scores(&scores, &labels, &ids, 1).unwrap()
    };
    (run(true), run(false))
}

#[test]
fn c7_query_update_direction() {
    let rows: Vec<(f64, f64)> = (0..20).map(query_update_rank1).collect();
    let on = rows.iter().map(|r| r.0).sum::<f64>() / 20.0;
    let off = rows.iter().map(|r| r.1).sum::<f64>() / 20.0;
    let holds = rows.iter().filter(|r| r.0 >= r.1).count();
    let ok = on >= off && holds >= 15;
    report(
        7,
        "query update direction",
        ok,
        &format!("mean Rank-1 with update {on:.4}, without {off:.4}; {holds}/20 seeds non-regressing"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- criterion 8

fn bx(cx: f32, cy: f32) -> BoundingBox {
    BoundingBox::new(cx, cy, 20.0, 20.0).unwrap()
}

fn det(frame: u32, b: BoundingBox, conf: f32) -> Detection {
    Detection::new(b, conf, 0, frame).unwrap()
}

#[test]
fn c8_metric_hand_cases() {
    // two objects over three frames; hypothesis ids swap from frame 1 on
    let (a, b) = (bx(50.0, 50.0), bx(200.0, 50.0));
    let mut gt = GroundTruth::default();
    let mut hyp = Vec::new();
    for f in 0..3u32 {
        for (oid, bb) in [(0u32, a), (1, b)] {
            gt.records.push(GtRecord { frame: f, object_id: oid, bbox: bb, class_id: 0, visible: true });
            let track_id = if f == 0 { oid } else { 1 - oid };
            hyp.push(TrackRecord { frame: f, track_id, bbox: bb, confidence: 1.0, class_id: 0, shot_id: 0 });
        }
    }
    let m = clear_mot(&gt, &hyp, 0.5).unwrap();
    let mot_ok = m.ids == 2 && m.fp == 0 && m.fn_ == 0 && m.gt_total == 6 && (m.mota - (1.0 - 2.0 / 6.0)).abs() < 1e-12;

    // exact detections score 1; a confident miss ahead of the hit halves AP;
    // finding one of two objects halves it as well
    let truth = vec![det(0, a, 1.0)];
    let ap_exact = average_precision(&truth, &[det(0, a, 1.0)], 0.5).unwrap().map;
    let ap_fp_first = average_precision(&truth, &[det(0, b, 0.9), det(0, a, 0.8)], 0.5).unwrap().map;
    let two = vec![det(0, a, 1.0), det(0, b, 1.0)];
    let ap_half_found = average_precision(&two, &[det(0, a, 0.9), det(0, bx(400.0, 400.0), 0.8)], 0.5).unwrap().map;
    let ap_ok = ap_exact == 1.0 && (ap_fp_first - 0.5).abs() < 1e-12 && (ap_half_found - 0.5).abs() < 1e-12;

    let mut r = rng(8);
    let mut monotone = true;
    for _ in 0..100 {
        let (nq, ng, nl) = (r.random_range(1..10), r.random_range(1..15), r.random_range(1..5));
        let scores: Vec<Vec<Option<f64>>> = (0..nq)
            .map(|_| (0..ng).map(|_| r.random_bool(0.9).then(|| r.random_range(-1.0..1.0))).collect())
            .collect();
        let ql: Vec<u32> = (0..nq).map(|_| r.random_range(0..nl)).collect();
        let gl: Vec<u32> = (0..ng).map(|_| r.random_range(0..nl)).collect();
        let acc: Vec<f64> = (1..=ng + 1).map(|k| rank_k_scores(&scores, &ql, &gl, k).unwrap()).collect();
        monotone &= acc.windows(2).all(|w| w[0] <= w[1]);
    }
    let ok = mot_ok && ap_ok && monotone;
    report(
        8,
        "metric hand cases",
        ok,
        &format!(
            "MOTA {:.4} IDS {}; AP {ap_exact} / {ap_fp_first} / {ap_half_found}; rank-k monotone {monotone}",
            m.mota, m.ids
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn c9_determinism_and_round_trip() {
    let _guard = heavy();
    let tmp = tempfile::tempdir().unwrap();
    let spec = ScenarioSpec::random(3, 16, vec![8], 8, 9).with_random_degradation(1, 3, 0.2);
    let (frames, _) = generate_scenario(&spec).unwrap();
    let decoded = decode_frames(&encode_frames(&frames).unwrap()).unwrap();
    let round_trip = decoded == frames;

    let input = tmp.path().join("v.svfb");
    save_frames(&input, &frames).unwrap();
    let (m, _) = run_to_dir(&input, &PipelineConfig::default(), &tmp.path().join("a"), true, Some(9)).unwrap();
    replay(&tmp.path().join("a/manifest.json"), &tmp.path().join("b")).unwrap();
    let mut differing = Vec::new();
    for p in &m.outputs {
        let name = p.file_name().unwrap();
        if std::fs::read(p).unwrap() != std::fs::read(tmp.path().join("b").join(name)).unwrap() {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    let ok = round_trip && differing.is_empty() && m.outputs.len() == 6;
    report(
        9,
        "determinism and round trip",
        ok,
        &format!("frames round-trip {round_trip}, {} outputs, differing {differing:?}", m.outputs.len()),
    );
    assert!(ok);
}
