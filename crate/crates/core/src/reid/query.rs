use crate::feature::cosine_similarity;

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub feature: Vec<f32>,
    /// Gallery item the feature came from; `None` for the seed.
    pub source: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identity {
    pub identity_id: u32,
    pub bank: Vec<BankEntry>,
}

impl Identity {
    pub fn new(identity_id: u32, feature: Vec<f32>) -> Self {
        Identity {
            identity_id,
            bank: vec![BankEntry { feature, source: None }],
        }
    }

    /// Best cosine between `feature` and any bank entry not taken from `skip`.
    pub fn similarity(&self, feature: &[f32], skip: Option<usize>) -> f64 {
        self.bank
            .iter()
            .filter(|e| skip.is_none() || e.source != skip)
            .map(|e| cosine_similarity(feature, &e.feature).unwrap_or(0.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuerySet {
    pub identities: Vec<Identity>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryUpdate {
    /// Index of the identity whose bank grew.
    pub appended_to: Option<usize>,
    pub matched_mean: f64,
    pub unmatched_mean: f64,
}

impl QuerySet {
    pub fn new(identities: Vec<Identity>) -> Self {
        QuerySet { identities }
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    /// Most similar identity (lowest index on ties) and its similarity.
    pub fn best(&self, feature: &[f32]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, id) in self.identities.iter().enumerate() {
            let s = id.similarity(feature, None);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        best
    }

    /// Split identities at `match_threshold`; append `feature` to the best
    /// identity's bank when the matched mean beats the unmatched mean (0 if
    /// none) by more than `delta`.
    pub fn update(&mut self, feature: &[f32], source: Option<usize>, match_threshold: f64, delta: f64) -> QueryUpdate {
        let sims: Vec<f64> = self.identities.iter().map(|id| id.similarity(feature, None)).collect();
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let (matched, unmatched): (Vec<f64>, Vec<f64>) = sims.iter().partition(|s| **s >= match_threshold);
        let (mm, um) = (mean(&matched), mean(&unmatched));
        let mut appended_to = None;
        if !matched.is_empty() && mm - um > delta {
            let best = self.best(feature).map(|(i, _)| i).expect("matched set is non-empty");
            self.identities[best].bank.push(BankEntry {
                feature: feature.to_vec(),
                source,
            });
            appended_to = Some(best);
        }
        QueryUpdate {
            appended_to,
            matched_mean: mm,
            unmatched_mean: um,
        }
    }
}

pub fn update_query_set(mut q: QuerySet, feature: &[f32], match_threshold: f64, delta: f64) -> QuerySet {
    q.update(feature, None, match_threshold, delta);
    q
}
