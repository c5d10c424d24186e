use std::collections::BTreeSet;

use super::query::{Identity, QuerySet};
use super::{face_similarity, person_similarity, tracklet_feature, trajectory_feature, Category, ReidParams, TrajectoryFeature};
use crate::error::Result;
use crate::feature::cosine_similarity;
use crate::trajectory::{Tracklet, TrackletEntry, Trajectory};

#[derive(Debug, Clone)]
pub struct LinkOutcome {
    pub trajectories: Vec<Trajectory>,
    /// Per-trajectory summaries, aligned with `trajectories`.
    pub features: Vec<TrajectoryFeature>,
    pub query_set: QuerySet,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Group per-shot tracklets into trajectories.
///
/// Tracklets present in the earliest frame seed the query set; the others
/// are visited in shot order and offered to it. Candidate links are then
/// taken greedily by descending similarity, skipping any merge that would
/// put two tracklets of the same object in one frame.
pub fn link_tracklets(tracklets: Vec<Tracklet>, frame_area: f64, params: &ReidParams) -> Result<LinkOutcome> {
    let mut tracklets = tracklets;
    tracklets.sort_by_key(|t| (t.shot_id, t.first_frame(), t.track_id));
    let n = tracklets.len();
    let feats = tracklets
        .iter()
        .map(|t| tracklet_feature(t, frame_area, params))
        .collect::<Result<Vec<_>>>()?;

    let start = tracklets.iter().filter_map(|t| t.first_frame()).min();
    let seeds: Vec<usize> = (0..n).filter(|&i| tracklets[i].first_frame() == start).collect();
    let mut seed_of = vec![None; n];
    let mut query = QuerySet::new(
        seeds
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                seed_of[i] = Some(k);
                Identity::new(k as u32, feats[i].feature.clone())
            })
            .collect(),
    );
    if params.query_update {
        for i in (0..n).filter(|i| seed_of[*i].is_none()) {
            query.update(&feats[i].feature, Some(i), params.query_match_threshold, params.query_update_delta);
        }
    }

    // a seed is represented by its whole bank, minus what the partner contributed
    let appearance = |i: usize, j: usize| -> Vec<&[f32]> {
        let mut v = vec![feats[i].feature.as_slice()];
        if let Some(k) = seed_of[i] {
            v.extend(
                query.identities[k]
                    .bank
                    .iter()
                    .filter(|e| e.source.is_some() && e.source != Some(j))
                    .map(|e| e.feature.as_slice()),
            );
        }
        v
    };
    let mut links: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if feats[i].category != feats[j].category {
                continue;
            }
            let mut reid = f64::NEG_INFINITY;
            for a in appearance(i, j) {
                for b in appearance(j, i) {
                    reid = reid.max(cosine_similarity(a, b).unwrap_or(0.0));
                }
            }
            let s = match feats[i].category {
                Category::Person => {
                    person_similarity(reid, face_similarity(&feats[i], &feats[j]), params.reid_weight, params.face_weight)
                }
                Category::Nonperson => reid,
            };
            if s >= params.link_threshold {
                links.push((s, i, j));
            }
        }
    }
    links.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut parent: Vec<usize> = (0..n).collect();
    let mut frames: Vec<BTreeSet<u32>> = tracklets.iter().map(|t| t.frames().collect()).collect();
    for (_, i, j) in links {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri == rj || !frames[ri].is_disjoint(&frames[rj]) {
            continue;
        }
        let (keep, gone) = if ri < rj { (ri, rj) } else { (rj, ri) };
        let moved = std::mem::take(&mut frames[gone]);
        frames[keep].extend(moved);
        parent[gone] = keep;
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if group_of[r] == usize::MAX {
            group_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of[r]].push(i);
    }
    // number objects by first appearance
    groups.sort_by_key(|g| {
        g.iter()
            .map(|&i| (tracklets[i].first_frame(), i))
            .min()
            .expect("groups are non-empty")
    });

    let mut slots: Vec<Option<Tracklet>> = tracklets.into_iter().map(Some).collect();
    let mut trajectories = Vec::with_capacity(groups.len());
    let mut features = Vec::with_capacity(groups.len());
    for (object_id, g) in groups.into_iter().enumerate() {
        let members: Vec<Tracklet> = g.iter().map(|&i| slots[i].take().expect("each tracklet used once")).collect();
        let mut traj = Trajectory {
            object_id: object_id as u32,
            tracklets: members,
            feature: Vec::new(),
        };
        let entries: Vec<&TrackletEntry> = traj.entries();
        let tf = trajectory_feature(object_id as u32, &entries, params.sample_stride, frame_area, params)?;
        traj.feature = tf.feature.clone();
        trajectories.push(traj);
        features.push(tf);
    }
    Ok(LinkOutcome {
        trajectories,
        features,
        query_set: query,
    })
}
