use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature {
    /// Items sharing this key with the query are not ranked against it.
    pub item: u64,
    pub label: u32,
    pub feature: Vec<f32>,
}

/// Rank-k from a precomputed query × gallery score table. `None` entries are
/// excluded from the ranking; ties go to the lower gallery index.
pub fn rank_k_scores(scores: &[Vec<Option<f64>>], query_labels: &[u32], gallery_labels: &[u32], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("rank k must be at least 1".into()));
    }
    if gallery_labels.is_empty() || query_labels.is_empty() {
        return Err(Error::Degenerate("rank-k needs queries and a non-empty gallery".into()));
    }
    if scores.len() != query_labels.len() || scores.iter().any(|r| r.len() != gallery_labels.len()) {
        return Err(Error::Dimension("score table does not match the label lists".into()));
    }
    let mut hits = 0usize;
    for (row, ql) in scores.iter().zip(query_labels) {
        let mut ranked: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(g, s)| s.map(|s| (g, s))).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if ranked.iter().take(k).any(|(g, _)| gallery_labels[*g] == *ql) {
            hits += 1;
        }
    }
    Ok(hits as f64 / query_labels.len() as f64)
}

pub fn rank_k(
    queries: &[LabeledFeature],
    gallery: &[LabeledFeature],
    k: usize,
    sim: impl Fn(&[f32], &[f32]) -> f64,
) -> Result<f64> {
    let scores: Vec<Vec<Option<f64>>> = queries
        .iter()
        .map(|q| {
            gallery
                .iter()
                .map(|g| (g.item != q.item).then(|| sim(&q.feature, &g.feature)))
                .collect()
        })
        .collect();
    let ql: Vec<u32> = queries.iter().map(|q| q.label).collect();
    let gl: Vec<u32> = gallery.iter().map(|g| g.label).collect();
    rank_k_scores(&scores, &ql, &gl, k)
}
