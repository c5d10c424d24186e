//! Pipeline hyperparameters and their flat `key = value` text form.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Every tunable of the pipeline. `Default` gives the documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Past frames feeding the local attention maps.
    pub tau: usize,
    /// Hann window truncation threshold.
    pub hanning_threshold: f64,
    /// Pool frequency a crop must exceed to be promoted to the global set.
    pub promote_frequency: u32,
    pub global_capacity: usize,
    pub pool_capacity: usize,
    pub pool_match_threshold: f64,
    pub query_update_delta: f64,
    pub reid_weight: f64,
    pub face_weight: f64,
    /// Top-k size for pointwise similarity; 0 selects 10% of the smaller crop.
    pub topk: usize,
    pub nms_iou: f64,
    pub gate_threshold: f64,
    pub max_age: u32,
    pub n_init: u32,
    pub shot_hist_threshold: f64,
    pub major_duration_frac: f64,
    pub major_area_frac: f64,

    /// Tracker association is vetoed above this appearance cost.
    pub max_appearance_cost: f64,
    /// Ring buffer size of per-track crop galleries.
    pub gallery_budget: usize,
    /// Pyramid levels used for multi-scale pointwise similarity.
    pub cpsn_levels: Vec<u8>,
    /// Absolute floor on candidate peak energy.
    pub candidate_floor: f64,
    pub sample_stride: usize,
    pub link_threshold: f64,
    pub query_match_threshold: f64,
    pub person_classes: Vec<u32>,
    pub iou_min: f64,
    pub fusion: bool,
    pub attn_ls: bool,
    pub attn_ll: bool,
    pub attn_gs: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tau: 3,
            hanning_threshold: 0.3,
            promote_frequency: 3,
            global_capacity: 8,
            pool_capacity: 24,
            pool_match_threshold: 0.7,
            query_update_delta: 0.1,
            reid_weight: 0.5,
            face_weight: 0.5,
            topk: 0,
            nms_iou: 0.45,
            gate_threshold: 9.4877,
            max_age: 30,
            n_init: 3,
            shot_hist_threshold: 0.6,
            major_duration_frac: 0.2,
            major_area_frac: 0.02,
            max_appearance_cost: 0.7,
            gallery_budget: 30,
            cpsn_levels: vec![0, 2],
            candidate_floor: 0.2,
            sample_stride: 5,
            link_threshold: 0.6,
            query_match_threshold: 0.7,
            person_classes: vec![0],
            iou_min: 0.5,
            fusion: true,
            attn_ls: true,
            attn_ll: true,
            attn_gs: true,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{v}` for `{key}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.tau == 0 {
            return fail("tau must be at least 1");
        }
        if !(0.0..1.0).contains(&self.hanning_threshold) {
            return fail("hanning_threshold must lie in [0,1)");
        }
        if self.pool_capacity <= self.global_capacity {
            return fail("pool_capacity must exceed global_capacity");
        }
        if !(0.0..=1.0).contains(&self.pool_match_threshold) {
            return fail("pool_match_threshold must lie in [0,1]");
        }
        if self.query_update_delta < 0.0 {
            return fail("query_update_delta must be non-negative");
        }
        if (self.reid_weight + self.face_weight - 1.0).abs() > 1e-9 {
            return fail("reid_weight + face_weight must equal 1");
        }
        if !(self.nms_iou > 0.0 && self.nms_iou < 1.0) {
            return fail("nms_iou must lie in (0,1)");
        }
        if !(self.iou_min > 0.0 && self.iou_min < 1.0) {
            return fail("iou_min must lie in (0,1)");
        }
        if self.gate_threshold <= 0.0 {
            return fail("gate_threshold must be positive");
        }
        if self.n_init == 0 {
            return fail("n_init must be at least 1");
        }
        if self.cpsn_levels.is_empty() || self.cpsn_levels.iter().any(|&l| l > 2) {
            return fail("cpsn_levels must name pyramid levels 0..=2");
        }
        if self.gallery_budget == 0 || self.sample_stride == 0 {
            return fail("gallery_budget and sample_stride must be positive");
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "tau" => self.tau = parse_num(key, v)?,
            "hanning_threshold" => self.hanning_threshold = parse_num(key, v)?,
            "promote_frequency" => self.promote_frequency = parse_num(key, v)?,
            "global_capacity" => self.global_capacity = parse_num(key, v)?,
            "pool_capacity" => self.pool_capacity = parse_num(key, v)?,
            "pool_match_threshold" => self.pool_match_threshold = parse_num(key, v)?,
            "query_update_delta" => self.query_update_delta = parse_num(key, v)?,
            "reid_weight" => self.reid_weight = parse_num(key, v)?,
            "face_weight" => self.face_weight = parse_num(key, v)?,
            "topk" => self.topk = parse_num(key, v)?,
            "nms_iou" => self.nms_iou = parse_num(key, v)?,
            "gate_threshold" => self.gate_threshold = parse_num(key, v)?,
            "max_age" => self.max_age = parse_num(key, v)?,
            "n_init" => self.n_init = parse_num(key, v)?,
            "shot_hist_threshold" => self.shot_hist_threshold = parse_num(key, v)?,
            "major_duration_frac" => self.major_duration_frac = parse_num(key, v)?,
            "major_area_frac" => self.major_area_frac = parse_num(key, v)?,
            "max_appearance_cost" => self.max_appearance_cost = parse_num(key, v)?,
            "gallery_budget" => self.gallery_budget = parse_num(key, v)?,
            "cpsn_levels" => self.cpsn_levels = parse_list(key, v)?,
            "candidate_floor" => self.candidate_floor = parse_num(key, v)?,
            "sample_stride" => self.sample_stride = parse_num(key, v)?,
            "link_threshold" => self.link_threshold = parse_num(key, v)?,
            "query_match_threshold" => self.query_match_threshold = parse_num(key, v)?,
            "person_classes" => self.person_classes = parse_list(key, v)?,
            "iou_min" => self.iou_min = parse_num(key, v)?,
            "fusion" => self.fusion = parse_bool(key, v)?,
            "attn_ls" => self.attn_ls = parse_bool(key, v)?,
            "attn_ll" => self.attn_ll = parse_bool(key, v)?,
            "attn_gs" => self.attn_gs = parse_bool(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped; unknown keys are an error.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set a single key, as from a command-line override.
    pub fn override_key(&mut self, key: &str, value: &str) -> Result<()> {
        self.set(key, value)
    }

    /// Full `key = value` dump in a fixed order; `from_text` reads it back exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("tau", self.tau.to_string());
        put("hanning_threshold", self.hanning_threshold.to_string());
        put("promote_frequency", self.promote_frequency.to_string());
        put("global_capacity", self.global_capacity.to_string());
        put("pool_capacity", self.pool_capacity.to_string());
        put("pool_match_threshold", self.pool_match_threshold.to_string());
        put("query_update_delta", self.query_update_delta.to_string());
        put("reid_weight", self.reid_weight.to_string());
        put("face_weight", self.face_weight.to_string());
        put("topk", self.topk.to_string());
        put("nms_iou", self.nms_iou.to_string());
        put("gate_threshold", self.gate_threshold.to_string());
        put("max_age", self.max_age.to_string());
        put("n_init", self.n_init.to_string());
        put("shot_hist_threshold", self.shot_hist_threshold.to_string());
        put("major_duration_frac", self.major_duration_frac.to_string());
        put("major_area_frac", self.major_area_frac.to_string());
        put("max_appearance_cost", self.max_appearance_cost.to_string());
        put("gallery_budget", self.gallery_budget.to_string());
        put("cpsn_levels", join(&self.cpsn_levels));
        put("candidate_floor", self.candidate_floor.to_string());
        put("sample_stride", self.sample_stride.to_string());
        put("link_threshold", self.link_threshold.to_string());
        put("query_match_threshold", self.query_match_threshold.to_string());
        put("person_classes", join(&self.person_classes));
        put("iou_min", self.iou_min.to_string());
        put("fusion", self.fusion.to_string());
        put("attn_ls", self.attn_ls.to_string());
        put("attn_ll", self.attn_ll.to_string());
        put("attn_gs", self.attn_gs.to_string());
        s
    }

    pub fn is_person_class(&self, class_id: u32) -> bool {
        self.person_classes.contains(&class_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(PipelineConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = PipelineConfig::from_text("tua = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown key `tua`"), "{err}");
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = PipelineConfig::from_text("# tuned\n tau = 5 # local window\n\ncpsn_levels = 0,1\nfusion = off\n").unwrap();
        assert_eq!(cfg.tau, 5);
        assert_eq!(cfg.cpsn_levels, vec![0, 1]);
        assert!(!cfg.fusion);
    }

    #[test]
    fn invariants_enforced() {
        assert!(PipelineConfig::from_text("pool_capacity = 8\nglobal_capacity = 8").is_err());
        assert!(PipelineConfig::from_text("reid_weight = 0.7").is_err());
        assert!(PipelineConfig::from_text("reid_weight = 0.7\nface_weight = 0.3").is_ok());
        assert!(PipelineConfig::from_text("tau = x").is_err());
        assert!(PipelineConfig::from_text("no equals sign").is_err());
    }
}
