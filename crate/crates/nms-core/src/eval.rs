//! Output quality measures: kept-set agreement between two methods, and
//! COCO-style average precision against ground truth.

use crate::detection::{Detection, KeepMask};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use serde::Serialize;
use std::collections::BTreeSet;

/// How closely one keep mask tracks another, as sets of kept indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementReport {
    /// |kept_a ∩ kept_b| / |kept_a ∪ kept_b|; 1.0 when both sets are empty.
    pub jaccard: f64,
    /// Kept by `a` but not by `b`.
    pub extra_kept: u64,
    /// Kept by `b` but not by `a`.
    pub missing_kept: u64,
}

/// Agreement between two masks of equal length.
pub fn agreement(a: &KeepMask, b: &KeepMask) -> Result<AgreementReport> {
    agreement_pooled([(a, b)])
}

/// Agreement with the kept sets pooled across many images (counts are summed
/// before the ratio is taken). Errors if any pair's lengths differ.
pub fn agreement_pooled<'a, I>(pairs: I) -> Result<AgreementReport>
where
    I: IntoIterator<Item = (&'a KeepMask, &'a KeepMask)>,
{
    let mut intersection = 0u64;
    let mut union = 0u64;
    let mut extra_kept = 0u64;
    let mut missing_kept = 0u64;
    for (a, b) in pairs {
        if a.len() != b.len() {
            return Err(Error::MaskLengthMismatch { left: a.len(), right: b.len() });
        }
        for (&ka, &kb) in a.bits().iter().zip(b.bits()) {
            match (ka, kb) {
                (true, true) => {
                    intersection += 1;
                    union += 1;
                }
                (true, false) => {
                    extra_kept += 1;
                    union += 1;
                }
                (false, true) => {
                    missing_kept += 1;
                    union += 1;
                }
                (false, false) => {}
            }
        }
    }
    let jaccard = if union == 0 { 1.0 } else { intersection as f64 / union as f64 };
    Ok(AgreementReport { jaccard, extra_kept, missing_kept })
}

/// An annotated object: where it is and what it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub bbox: BoundingBox,
    pub category: u32,
}

/// The ten COCO match thresholds, 0.50 to 0.95 in steps of 0.05. Written as
/// literals so a prediction whose overlap is exactly, say, 0.6 matches at
/// the 0.6 threshold.
pub const AP_THRESHOLDS: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

/// Average precision per match threshold, plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApResult {
    /// (IOU match threshold, AP) pairs, ascending by threshold.
    pub ap_per_threshold: Vec<(f64, f64)>,
    /// Arithmetic mean of the ten APs.
    pub map_50_95: f64,
}

/// COCO-style evaluation: per category and match threshold, predictions are
/// matched greedily by descending score to the best-overlapping unmatched
/// ground-truth box (a match needs IOU ≥ threshold), the events across all
/// images build one precision–recall curve, and AP is its 101-point
/// interpolation. Categories with no ground truth anywhere are skipped; APs
/// are averaged over the remaining categories, then over thresholds. With no
/// ground truth at all the result is all zeros.
///
/// `predictions[i]` and `ground_truth[i]` describe the same image; the two
/// slices must have equal length. Prediction order within an image does not
/// matter (sorting is internal).
pub fn evaluate_ap(
    predictions: &[Vec<Detection>],
    ground_truth: &[Vec<GroundTruthBox>],
) -> ApResult {
    assert_eq!(
        predictions.len(),
        ground_truth.len(),
        "predictions and ground truth must cover the same images"
    );
    let categories: BTreeSet<u32> =
        ground_truth.iter().flat_map(|gs| gs.iter().map(|g| g.category)).collect();

    let mut ap_sums = [0.0f64; AP_THRESHOLDS.len()];
    for &cat in &categories {
        let total_gt: u64 = ground_truth
            .iter()
            .map(|gs| gs.iter().filter(|g| g.category == cat).count() as u64)
            .sum();
        for (ti, &thr) in AP_THRESHOLDS.iter().enumerate() {
            ap_sums[ti] += category_ap(predictions, ground_truth, cat, thr, total_gt);
        }
    }

    let denom = categories.len().max(1) as f64;
    let ap_per_threshold: Vec<(f64, f64)> =
        AP_THRESHOLDS.iter().zip(ap_sums).map(|(&thr, sum)| (thr, sum / denom)).collect();
    let map_50_95 =
        ap_per_threshold.iter().map(|&(_, ap)| ap).sum::<f64>() / AP_THRESHOLDS.len() as f64;
    ApResult { ap_per_threshold, map_50_95 }
}

/// One PR event: score, image, input index, and whether it matched.
type Event = (f64, usize, usize, bool);

fn category_ap(
    predictions: &[Vec<Detection>],
    ground_truth: &[Vec<GroundTruthBox>],
    cat: u32,
    thr: f64,
    total_gt: u64,
) -> f64 {
    if total_gt == 0 {
        return 0.0;
    }
    let mut events: Vec<Event> = Vec::new();
    for (img, (preds, gts)) in predictions.iter().zip(ground_truth).enumerate() {
        let gts: Vec<&GroundTruthBox> = gts.iter().filter(|g| g.category == cat).collect();
        let mut preds: Vec<&Detection> = preds.iter().filter(|d| d.category == cat).collect();
        preds.sort_by(|a, b| {
            b.score.partial_cmp(&a.score).expect("finite score").then(a.index.cmp(&b.index))
        });
        let mut matched = vec![false; gts.len()];
        for d in preds {
            let mut best: Option<(usize, f64)> = None;
            for (gi, g) in gts.iter().enumerate() {
                if matched[gi] {
                    continue;
                }
                let ov = iou(&d.bbox, &g.bbox);
                if best.is_none_or(|(_, b)| ov > b) {
                    best = Some((gi, ov));
                }
            }
            let hit = match best {
                Some((gi, ov)) if ov >= thr => {
                    matched[gi] = true;
                    true
                }
                _ => false,
            };
            events.push((d.score, img, d.index, hit));
        }
    }
    ap_from_events(events, total_gt)
}

/// 101-point interpolated AP from pooled, score-ranked match events.
fn ap_from_events(mut events: Vec<Event>, total_gt: u64) -> f64 {
    events.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).expect("finite score").then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    });
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut recalls = Vec::with_capacity(events.len());
    let mut precisions = Vec::with_capacity(events.len());
    for &(_, _, _, hit) in &events {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        recalls.push(tp as f64 / total_gt as f64);
        precisions.push(tp as f64 / (tp + fp) as f64);
    }
    // Precision envelope: best precision achievable at this recall or beyond.
    for k in (0..precisions.len().saturating_sub(1)).rev() {
        precisions[k] = precisions[k].max(precisions[k + 1]);
    }
    let mut sum = 0.0;
    let mut k = 0;
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        while k < recalls.len() && recalls[k] < r {
            k += 1;
        }
        if k < recalls.len() {
            sum += precisions[k];
        }
    }
    sum / 101.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::DetectionSet;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2)
    }

    fn mask(bits: &[bool]) -> KeepMask {
        KeepMask::from(bits.to_vec())
    }

    #[test]
    fn agreement_identical() {
        let a = mask(&[true, false, true]);
        let r = agreement(&a, &a).unwrap();
        assert_eq!(r, AgreementReport { jaccard: 1.0, extra_kept: 0, missing_kept: 0 });
    }

    #[test]
    fn agreement_partial_overlap() {
        let a = mask(&[true, false, false]);
        let b = mask(&[true, false, true]);
        let r = agreement(&a, &b).unwrap();
        assert_eq!(r.jaccard, 0.5);
        assert_eq!(r.extra_kept, 0);
        assert_eq!(r.missing_kept, 1);
    }

    #[test]
    fn agreement_both_empty_kept_sets() {
        let a = mask(&[false, false]);
        let r = agreement(&a, &a).unwrap();
        assert_eq!(r.jaccard, 1.0);
    }

    #[test]
    fn agreement_is_antisymmetric_in_counts() {
        let a = mask(&[true, true, false, false]);
        let b = mask(&[true, false, true, false]);
        let ab = agreement(&a, &b).unwrap();
        let ba = agreement(&b, &a).unwrap();
        assert_eq!(ab.extra_kept, ba.missing_kept);
        assert_eq!(ab.missing_kept, ba.extra_kept);
        assert_eq!(ab.jaccard, ba.jaccard);
    }

    #[test]
    fn agreement_rejects_length_mismatch() {
        let a = mask(&[true]);
        let b = mask(&[true, false]);
        assert!(matches!(agreement(&a, &b), Err(Error::MaskLengthMismatch { left: 1, right: 2 })));
    }

    #[test]
    fn agreement_pools_counts_across_images() {
        let a1 = mask(&[true, false]);
        let b1 = mask(&[true, true]);
        let a2 = mask(&[true]);
        let b2 = mask(&[false]);
        let r = agreement_pooled([(&a1, &b1), (&a2, &b2)]).unwrap();
        // Kept sets: a = {0, 2}, b = {0, 1}; intersection 1, union 3.
        assert_eq!(r.jaccard, 1.0 / 3.0);
        assert_eq!(r.extra_kept, 1);
        assert_eq!(r.missing_kept, 1);
    }

    fn toy_detections(boxes: Vec<(BoundingBox, f64, u32)>) -> Vec<Detection> {
        DetectionSet::from_boxes("toy", boxes).detections
    }

    #[test]
    fn perfect_predictions_score_full_map() {
        let gt = vec![vec![
            GroundTruthBox { bbox: bb(0.0, 0.0, 10.0, 10.0), category: 0 },
            GroundTruthBox { bbox: bb(20.0, 0.0, 30.0, 10.0), category: 1 },
        ]];
        let preds = vec![toy_detections(vec![
            (bb(0.0, 0.0, 10.0, 10.0), 1.0, 0),
            (bb(20.0, 0.0, 30.0, 10.0), 1.0, 1),
        ])];
        let r = evaluate_ap(&preds, &gt);
        assert_eq!(r.map_50_95, 1.0);
        assert!(r.ap_per_threshold.iter().all(|&(_, ap)| ap == 1.0));
    }

    #[test]
    fn no_predictions_score_zero() {
        let gt = vec![vec![GroundTruthBox { bbox: bb(0.0, 0.0, 10.0, 10.0), category: 0 }]];
        let preds = vec![Vec::new()];
        let r = evaluate_ap(&preds, &gt);
        assert_eq!(r.map_50_95, 0.0);
    }

    #[test]
    fn borderline_match_counts_at_its_threshold() {
        // One GT box; the good prediction overlaps it with IOU exactly 0.6,
        // the bad one not at all. The TP outranks the FP, so precision at
        // full recall is 1 and AP@0.5 is exactly 1; matches survive through
        // the 0.6 threshold and fail beyond, giving a mean of 3/10.
        let gt = vec![vec![GroundTruthBox { bbox: bb(0.0, 0.0, 10.0, 10.0), category: 0 }]];
        let preds = vec![toy_detections(vec![
            (bb(0.0, 0.0, 10.0, 6.0), 0.9, 0),
            (bb(20.0, 20.0, 25.0, 25.0), 0.8, 0),
        ])];
        let r = evaluate_ap(&preds, &gt);
        assert_eq!(r.ap_per_threshold[0], (0.5, 1.0));
        assert_eq!(r.ap_per_threshold[1], (0.55, 1.0));
        assert_eq!(r.ap_per_threshold[2], (0.6, 1.0));
        assert_eq!(r.ap_per_threshold[3], (0.65, 0.0));
        assert!((r.map_50_95 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn prediction_order_does_not_matter() {
        let gt = vec![vec![
            GroundTruthBox { bbox: bb(0.0, 0.0, 10.0, 10.0), category: 0 },
            GroundTruthBox { bbox: bb(30.0, 0.0, 42.0, 10.0), category: 0 },
        ]];
        let forward = toy_detections(vec![
            (bb(0.0, 0.0, 10.0, 9.0), 0.9, 0),
            (bb(30.0, 0.0, 41.0, 10.0), 0.7, 0),
            (bb(100.0, 100.0, 110.0, 110.0), 0.8, 0),
        ]);
        let mut backward = forward.clone();
        backward.reverse();
        let a = evaluate_ap(&[forward], &gt);
        let b = evaluate_ap(&[backward], &gt);
        assert_eq!(a, b);
    }

    #[test]
    fn categories_without_ground_truth_are_skipped() {
        let gt = vec![vec![GroundTruthBox { bbox: bb(0.0, 0.0, 10.0, 10.0), category: 0 }]];
        let preds = vec![toy_detections(vec![
            (bb(0.0, 0.0, 10.0, 10.0), 1.0, 0),
            // Stray prediction in a category nobody annotated: ignored.
            (bb(50.0, 50.0, 60.0, 60.0), 0.9, 5),
        ])];
        let r = evaluate_ap(&preds, &gt);
        assert_eq!(r.map_50_95, 1.0);
    }

    #[test]
    fn no_ground_truth_at_all_gives_zero() {
        let r = evaluate_ap(&[Vec::new()], &[Vec::new()]);
        assert_eq!(r.map_50_95, 0.0);
        assert_eq!(r.ap_per_threshold.len(), 10);
    }
}
