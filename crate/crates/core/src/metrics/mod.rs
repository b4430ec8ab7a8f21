//! Detection matching and the scores built from it: precision, recall,
//! f-measure, 11-point interpolated AP and mAP over unseen scripts.

mod ap;
mod evaluate;
mod matching;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::annotation::ScriptClass;
use crate::classifier::ClassifyError;

pub use ap::ap_11point;
pub use evaluate::{
    evaluate, AgnosticScores, ClassAwareScores, ClassScores, ConfigEcho, Diagnostics, EvalConfig, EvalReport,
    ImageCounts,
};
pub use matching::{match_detections, DetectionMatch, GtRegion, MatchResult, Outcome};

pub const DEFAULT_IOU_THRESH: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("class set is empty")]
    EmptyClassSet,
    #[error("no AP for class {0}")]
    ClassNotEvaluated(String),
    #[error("detection {region_id:?} in image {image_id} has no script assignment")]
    MissingAssignment {
        image_id: String,
        region_id: Option<String>,
    },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// `P = tp / (tp + fp)`, `R = tp / n_gt`, `F = 2PR / (P + R)`; each is 0
/// when its denominator is 0.
pub fn precision_recall_f(tp: usize, fp: usize, n_gt: usize) -> PrecisionRecall {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 };
    PrecisionRecall {
        precision,
        recall,
        f_measure: f_measure(precision, recall),
    }
}

pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Arithmetic mean of the APs of `classes`, summed in class order.
pub fn mean_ap<'a>(
    per_class: &BTreeMap<ScriptClass, f64>,
    classes: impl IntoIterator<Item = &'a ScriptClass>,
) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for class in classes {
        sum += per_class
            .get(class)
            .ok_or_else(|| MetricsError::ClassNotEvaluated(class.to_string()))?;
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::EmptyClassSet);
    }
    Ok(sum / n as f64)
}
