use super::{feature_similarity, ReidParams, TrajectoryFeature};

/// Score given to a gallery video with no major object of the query's category.
pub const NO_MATCH_SCORE: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalHit {
    /// Index into the gallery slice.
    pub video: usize,
    pub score: f64,
}

/// Rank gallery videos for each query major by their best-matching major.
/// Ties go to the lower video index.
pub fn retrieve_videos(
    queries: &[TrajectoryFeature],
    gallery: &[Vec<TrajectoryFeature>],
    params: &ReidParams,
) -> Vec<Vec<RetrievalHit>> {
    queries
        .iter()
        .map(|q| {
            let mut hits: Vec<RetrievalHit> = gallery
                .iter()
                .enumerate()
                .map(|(video, majors)| RetrievalHit {
                    video,
                    score: majors
                        .iter()
                        .filter_map(|m| feature_similarity(q, m, params))
                        .fold(NO_MATCH_SCORE, f64::max),
                })
                .collect();
            hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.video.cmp(&b.video)));
            hits
        })
        .collect()
}

/// Video-level ranking: a gallery video scores the best hit of any query major.
pub fn rank_gallery(
    query_majors: &[TrajectoryFeature],
    gallery: &[Vec<TrajectoryFeature>],
    params: &ReidParams,
) -> Vec<RetrievalHit> {
    let mut best: Vec<RetrievalHit> = (0..gallery.len())
        .map(|video| RetrievalHit {
            video,
            score: NO_MATCH_SCORE,
        })
        .collect();
    for ranking in retrieve_videos(query_majors, gallery, params) {
        for h in ranking {
            best[h.video].score = best[h.video].score.max(h.score);
        }
    }
    best.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.video.cmp(&b.video)));
    best
}
