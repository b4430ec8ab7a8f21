use serde::Serialize;

use super::MetricsError;
use crate::geometry::{quad_iou, Quad};
use crate::nms::check_threshold;

/// A ground-truth region as seen by the matcher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtRegion {
    pub quad: Quad,
    pub dont_care: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    TruePositive {
        gt: usize,
    },
    FalsePositive,
    /// Absorbed by a don't-care region: counts as neither TP nor FP.
    Ignored {
        gt: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionMatch {
    pub outcome: Outcome,
    /// IoU with the matched region, or the best IoU against any region for
    /// false positives.
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub detections: Vec<DetectionMatch>,
    /// For each ground-truth region, the detection matched to it.
    pub gt_matched: Vec<Option<usize>>,
    pub n_care_gt: usize,
}

impl MatchResult {
    fn count(&self, pred: impl Fn(&Outcome) -> bool) -> usize {
        self.detections.iter().filter(|d| pred(&d.outcome)).count()
    }

    pub fn tp(&self) -> usize {
        self.count(|o| matches!(o, Outcome::TruePositive { .. }))
    }

    pub fn fp(&self) -> usize {
        self.count(|o| matches!(o, Outcome::FalsePositive))
    }

    pub fn ignored(&self) -> usize {
        self.count(|o| matches!(o, Outcome::Ignored { .. }))
    }

    /// TP/FP flags in detection order, ignored detections dropped.
    pub fn hits(&self) -> Vec<bool> {
        self.detections
            .iter()
            .filter_map(|d| match d.outcome {
                Outcome::TruePositive { .. } => Some(true),
                Outcome::FalsePositive => Some(false),
                Outcome::Ignored { .. } => None,
            })
            .collect()
    }
}

/// Greedy matching of `dets` (best rank first) against one image's ground
/// truth.
///
/// Each detection takes the still-unmatched scorable region with the
/// highest IoU if that IoU reaches `iou_thresh`. Failing that, it is
/// ignored when some don't-care region reaches the threshold, and counted
/// as a false positive otherwise. Equal IoUs go to the lower region index.
pub fn match_detections(dets: &[Quad], gts: &[GtRegion], iou_thresh: f64) -> Result<MatchResult, MetricsError> {
    check_threshold(iou_thresh).map_err(|_| MetricsError::InvalidThreshold(iou_thresh))?;

    let mut gt_matched: Vec<Option<usize>> = vec![None; gts.len()];
    let mut detections = Vec::with_capacity(dets.len());
    for (di, det) in dets.iter().enumerate() {
        let ious: Vec<f64> = gts.iter().map(|g| quad_iou(det, &g.quad)).collect();

        let best_free = best_index(&ious, |gi| !gts[gi].dont_care && gt_matched[gi].is_none());
        if let Some(gi) = best_free.filter(|&gi| ious[gi] >= iou_thresh) {
            gt_matched[gi] = Some(di);
            detections.push(DetectionMatch {
                outcome: Outcome::TruePositive { gt: gi },
                iou: ious[gi],
            });
            continue;
        }

        let best_dont_care = best_index(&ious, |gi| gts[gi].dont_care);
        if let Some(gi) = best_dont_care.filter(|&gi| ious[gi] >= iou_thresh) {
            detections.push(DetectionMatch {
                outcome: Outcome::Ignored { gt: gi },
                iou: ious[gi],
            });
            continue;
        }

        detections.push(DetectionMatch {
            outcome: Outcome::FalsePositive,
            iou: ious.iter().copied().fold(0.0, f64::max),
        });
    }

    Ok(MatchResult {
        detections,
        gt_matched,
        n_care_gt: gts.iter().filter(|g| !g.dont_care).count(),
    })
}

fn best_index(ious: &[f64], eligible: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &iou) in ious.iter().enumerate() {
        if eligible(i) && best.is_none_or(|b| iou > ious[b]) {
            best = Some(i);
        }
    }
    best
}
