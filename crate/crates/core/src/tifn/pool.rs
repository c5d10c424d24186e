use crate::feature::{cosine_similarity, FeatureCrop};

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub crop: FeatureCrop,
    pub frequency: u32,
    pub confidence: f32,
    signature: Vec<f32>,
}

impl PoolEntry {
    pub fn new(crop: FeatureCrop, frequency: u32) -> Self {
        let signature = crop.pooled();
        PoolEntry {
            confidence: crop.spatial.confidence,
            crop,
            frequency,
            signature,
        }
    }

    pub fn signature(&self) -> &[f32] {
        &self.signature
    }

    fn replace_crop(&mut self, crop: FeatureCrop) {
        self.signature = crop.pooled();
        self.confidence = crop.spatial.confidence;
        self.crop = crop;
    }
}

/// What happened to one incoming crop during a pool update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolEvent {
    Appended { index: usize },
    ReplacedLowest { index: usize },
    Matched { index: usize, crop_replaced: bool },
    Discarded,
}

/// Bounded set of recently seen object features with match frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    capacity: usize,
    entries: Vec<PoolEntry>,
}

fn min_confidence_index(entries: &[PoolEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in entries.iter().enumerate() {
        if best.is_none_or(|b| e.confidence < entries[b].confidence) {
            best = Some(i);
        }
    }
    best
}

impl CandidatePool {
    pub fn new(capacity: usize) -> Self {
        CandidatePool {
            capacity,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Index and similarity of the best-matching entry at or above `threshold`.
    fn best_match(&self, signature: &[f32], threshold: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            // zero signatures match nothing
            let Ok(s) = cosine_similarity(signature, &e.signature) else {
                continue;
            };
            if s >= threshold && best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Apply the append / replace-lowest / match rules to each crop in turn.
    pub fn update(&mut self, new_crops: Vec<FeatureCrop>, match_threshold: f64) -> Vec<PoolEvent> {
        let mut log = Vec::with_capacity(new_crops.len());
        for crop in new_crops {
            let sig = crop.pooled();
            let event = match self.best_match(&sig, match_threshold) {
                Some(index) => {
                    let e = &mut self.entries[index];
                    e.frequency += 1;
                    let crop_replaced = crop.spatial.confidence > e.confidence;
                    if crop_replaced {
                        e.replace_crop(crop);
                    }
                    PoolEvent::Matched { index, crop_replaced }
                }
                None if self.entries.len() < self.capacity => {
                    self.entries.push(PoolEntry::new(crop, 1));
                    PoolEvent::Appended {
                        index: self.entries.len() - 1,
                    }
                }
                None => match min_confidence_index(&self.entries) {
                    Some(index) if crop.spatial.confidence > self.entries[index].confidence => {
                        self.entries[index] = PoolEntry::new(crop, 1);
                        PoolEvent::ReplacedLowest { index }
                    }
                    _ => PoolEvent::Discarded,
                },
            };
            log.push(event);
        }
        log
    }
}

/// Long-lived object features promoted from the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSet {
    capacity: usize,
    entries: Vec<PoolEntry>,
}

impl GlobalSet {
    pub fn new(capacity: usize) -> Self {
        GlobalSet {
            capacity,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[cfg(test)]
    pub(crate) fn push_unchecked(&mut self, e: PoolEntry) {
        self.entries.push(e);
    }
}

pub fn update_candidate_pool(mut pool: CandidatePool, new_crops: Vec<FeatureCrop>, match_threshold: f64) -> CandidatePool {
    pool.update(new_crops, match_threshold);
    pool
}

/// Move pool entries seen more than `gamma` times into the global set.
///
/// With the set full, a candidate displaces the lowest-confidence member
/// only when it beats that member on both confidence and frequency. Entries
/// that cannot be placed stay in the pool.
pub fn promote_to_global(pool: CandidatePool, mut global: GlobalSet, gamma: u32) -> (CandidatePool, GlobalSet) {
    let CandidatePool { capacity, entries } = pool;
    let mut kept = Vec::with_capacity(entries.len());
    for e in entries {
        if e.frequency <= gamma {
            kept.push(e);
            continue;
        }
        if global.entries.len() < global.capacity {
            global.entries.push(e);
            continue;
        }
        match min_confidence_index(&global.entries) {
            Some(i) if e.confidence > global.entries[i].confidence && e.frequency > global.entries[i].frequency => {
                global.entries[i] = e;
            }
            _ => kept.push(e),
        }
    }
    (CandidatePool { capacity, entries: kept }, global)
}
