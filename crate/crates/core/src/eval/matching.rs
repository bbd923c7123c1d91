use crate::dataset::Annotation;
use crate::geometry::{descending_order, ioa, iou, ScoredBox};

/// Overlap needed for a detection to count as a hit.
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOutcome {
    TruePositive { annotation: usize },
    FalsePositive,
    /// Landed on an ignore region; counts as neither hit nor false alarm.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// `(detection index, annotation index)` pairs in matching order.
    pub matches: Vec<(usize, usize)>,
    /// Outcome of each detection, indexed like the input.
    pub outcomes: Vec<DetectionOutcome>,
}

/// Greedy matching of one image's detections.
///
/// Detections are visited by descending score (ties in input order). Each
/// takes the still unmatched evaluable annotation with the highest IoU at or
/// above `iou_threshold`, lowest index on ties. A detection that finds none
/// but covers an ignore region by at least `iou_threshold` of its own area is
/// dropped; anything else is a false positive.
pub fn match_image(dets: &[ScoredBox], annotations: &[Annotation], iou_threshold: f64) -> MatchResult {
    let mut taken = vec![false; annotations.len()];
    let mut outcomes = vec![DetectionOutcome::FalsePositive; dets.len()];
    let mut matches = Vec::new();

    for d in descending_order(dets, ScoredBox::score) {
        let det = &dets[d].bbox;
        let mut best: Option<(usize, f64)> = None;
        for (a, ann) in annotations.iter().enumerate() {
            if ann.ignore || taken[a] {
                continue;
            }
            let overlap = iou(det, &ann.bbox);
            if overlap >= iou_threshold && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((a, overlap));
            }
        }
        outcomes[d] = match best {
            Some((a, _)) => {
                taken[a] = true;
                matches.push((d, a));
                DetectionOutcome::TruePositive { annotation: a }
            }
            None if annotations
                .iter()
                .any(|ann| ann.ignore && ioa(det, &ann.bbox) >= iou_threshold) =>
            {
                DetectionOutcome::Ignored
            }
            None => DetectionOutcome::FalsePositive,
        };
    }

    let evaluable = annotations.iter().filter(|a| !a.ignore).count();
    let false_positives = outcomes
        .iter()
        .filter(|o| **o == DetectionOutcome::FalsePositive)
        .count();
    MatchResult {
        true_positives: matches.len(),
        false_positives,
        false_negatives: evaluable - matches.len(),
        matches,
        outcomes,
    }
}
