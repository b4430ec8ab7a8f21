//! Greedy non-maximum suppression over quadrilateral detections.

use thiserror::Error;

use crate::annotation::DetectionRecord;
use crate::geometry::quad_iou;

pub const DEFAULT_NMS_IOU: f64 = 0.3;
pub const DEFAULT_NMS_SCORE: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NmsError {
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("detections from several images ({0:?} and {1:?})")]
    MixedImages(String, String),
}

pub(crate) fn check_threshold(t: f64) -> Result<(), NmsError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(NmsError::InvalidThreshold(t))
    }
}

/// Drops detections scoring below `score_thresh`, then keeps detections in
/// descending confidence unless they overlap an already kept one with IoU
/// strictly above `iou_thresh`. Equal confidences keep input order.
pub fn nms(dets: &[DetectionRecord], iou_thresh: f64, score_thresh: f64) -> Result<Vec<DetectionRecord>, NmsError> {
    check_threshold(iou_thresh)?;
    check_threshold(score_thresh)?;
    if let Some(first) = dets.first() {
        if let Some(other) = dets.iter().find(|d| d.image_id != first.image_id) {
            return Err(NmsError::MixedImages(first.image_id.clone(), other.image_id.clone()));
        }
    }

    let mut order: Vec<&DetectionRecord> = dets.iter().filter(|d| d.confidence >= score_thresh).collect();
    // Stable: ties stay in input order.
    order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));

    let mut kept: Vec<&DetectionRecord> = Vec::new();
    for det in order {
        if kept.iter().all(|k| quad_iou(&k.quad, &det.quad) <= iou_thresh) {
            kept.push(det);
        }
    }
    Ok(kept.into_iter().cloned().collect())
}
