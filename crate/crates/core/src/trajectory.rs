//! Per-shot tracklets and their cross-shot grouping.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackState {
    Tentative,
    Confirmed,
    Deleted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackletEntry {
    pub frame_index: u32,
    pub bbox: BoundingBox,
    pub confidence: f32,
    pub class_id: u32,
    /// Appearance vector of the detection (average-pooled finest-level crop).
    pub feature: Vec<f32>,
    /// Face embedding when a face was found inside the box.
    pub face: Option<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub track_id: u32,
    pub shot_id: u32,
    pub entries: Vec<TrackletEntry>,
    pub state: TrackState,
}

impl Tracklet {
    pub fn frames(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.frame_index)
    }

    pub fn first_frame(&self) -> Option<u32> {
        self.entries.first().map(|e| e.frame_index)
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.entries.last().map(|e| e.frame_index)
    }

    /// Most frequent class over entries, lowest id on ties.
    pub fn majority_class(&self) -> u32 {
        majority_class(self.entries.iter().map(|e| e.class_id))
    }
}

pub(crate) fn majority_class(classes: impl Iterator<Item = u32>) -> u32 {
    let mut counts = std::collections::BTreeMap::new();
    for c in classes {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .fold((0u32, 0usize), |best, (c, n)| if n > best.1 { (c, n) } else { best })
        .0
}

/// One object's tracklets across the shots of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub object_id: u32,
    pub tracklets: Vec<Tracklet>,
    pub feature: Vec<f32>,
}

impl Trajectory {
    /// Entries of all member tracklets in frame order.
    pub fn entries(&self) -> Vec<&TrackletEntry> {
        let mut all: Vec<&TrackletEntry> = self.tracklets.iter().flat_map(|t| &t.entries).collect();
        all.sort_by_key(|e| e.frame_index);
        all
    }

    pub fn frame_set(&self) -> BTreeSet<u32> {
        self.tracklets.iter().flat_map(|t| t.frames()).collect()
    }

    pub fn shot_ids(&self) -> BTreeSet<u32> {
        self.tracklets.iter().map(|t| t.shot_id).collect()
    }

    /// No frame is claimed by two member tracklets.
    pub fn is_consistent(&self) -> bool {
        let total: usize = self.tracklets.iter().map(|t| t.entries.len()).sum();
        total == self.frame_set().len()
    }
}
