//! Detection records, keep masks, and the priority order shared by the graph
//! builder and every suppression method.

use crate::geometry::BoundingBox;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// One scored candidate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Position of the record in its image's input list; unique per set.
    pub index: usize,
    pub bbox: BoundingBox,
    /// Confidence in [0, 1], finite.
    pub score: f64,
    /// Integer class label.
    pub category: u32,
}

/// All candidate detections of one image, in input order
/// (`detections[i].index == i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub image_id: String,
    pub detections: Vec<Detection>,
}

impl DetectionSet {
    /// Build a set from `(bbox, score, category)` triples; indices are
    /// assigned by position.
    pub fn from_boxes(
        image_id: impl Into<String>,
        boxes: impl IntoIterator<Item = (BoundingBox, f64, u32)>,
    ) -> Self {
        let detections = boxes
            .into_iter()
            .enumerate()
            .map(|(index, (bbox, score, category))| Detection { index, bbox, score, category })
            .collect();
        DetectionSet { image_id: image_id.into(), detections }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Rank `a` against `b`: score descending, then input index ascending.
/// `Less` means `a` is processed first. Scores tie only rarely, but every
/// method and the graph builder resolve those ties through this one order so
/// their masks stay comparable bit for bit.
pub fn priority_cmp(a: &Detection, b: &Detection) -> Ordering {
    b.score.partial_cmp(&a.score).unwrap().then_with(|| a.index.cmp(&b.index))
}

/// True when `a` outranks `b`.
pub fn priority_gt(a: &Detection, b: &Detection) -> bool {
    priority_cmp(a, b) == Ordering::Less
}

/// Indices 0..n sorted by descending priority.
pub fn priority_order(dets: &[Detection]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_unstable_by(|&i, &j| priority_cmp(&dets[i], &dets[j]));
    idx
}

/// Per-detection keep (true) / suppress (false) verdicts, aligned with input
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeepMask(Vec<bool>);

impl KeepMask {
    pub fn new(bits: Vec<bool>) -> Self {
        KeepMask(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn kept_count(&self) -> usize {
        self.0.iter().filter(|&&k| k).count()
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter_map(|(i, &k)| k.then_some(i)).collect()
    }
}

impl From<Vec<bool>> for KeepMask {
    fn from(bits: Vec<bool>) -> Self {
        KeepMask(bits)
    }
}

impl std::ops::Index<usize> for KeepMask {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.0[i]
    }
}
