//! End-to-end scoring of one detection run against a dataset.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{ap_11point, match_detections, mean_ap, precision_recall_f, GtRegion, MetricsError, DEFAULT_IOU_THRESH};
use crate::annotation::{
    select_images, ClassSplit, Dataset, DetectionRecord, DetectionSet, GroundTruthRecord, ImageFilter, ScriptClass,
};
use crate::classifier::{rank_score, Assignments, ScoreMode};
use crate::nms::check_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalConfig {
    pub iou_thresh: f64,
    pub score_mode: ScoreMode,
    /// AP reported for a class with no ground truth and no detections.
    pub empty_class_ap: f64,
    pub image_filter: ImageFilter,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresh: DEFAULT_IOU_THRESH,
            score_mode: ScoreMode::Detector,
            empty_class_ap: 1.0,
            image_filter: ImageFilter::UnseenOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub iou_thresh: f64,
    pub score_mode: ScoreMode,
    pub empty_class_ap: f64,
    pub image_filter: ImageFilter,
    pub seen: Vec<String>,
    pub unseen: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImageCounts {
    pub total: usize,
    pub evaluated: usize,
    pub detections: usize,
    pub detections_without_ground_truth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScores {
    pub ap: f64,
    pub n_gt: usize,
    pub detections: usize,
    pub tp: usize,
    pub fp: usize,
    pub ignored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAwareScores {
    pub per_class: BTreeMap<String, ClassScores>,
    pub map: f64,
}

/// Class-agnostic box scores over a set of images.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgnosticScores {
    pub images: usize,
    pub n_gt: usize,
    pub tp: usize,
    pub fp: usize,
    pub ignored: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub nonconvex_quads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    pub images: ImageCounts,
    /// Present when script assignments were supplied.
    pub class_aware: Option<ClassAwareScores>,
    pub combined: AgnosticScores,
    pub per_script: BTreeMap<String, AgnosticScores>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    images: usize,
    n_gt: usize,
    tp: usize,
    fp: usize,
    ignored: usize,
}

impl Counts {
    fn add(&mut self, other: &Counts) {
        self.images += other.images;
        self.n_gt += other.n_gt;
        self.tp += other.tp;
        self.fp += other.fp;
        self.ignored += other.ignored;
    }

    fn scores(&self) -> AgnosticScores {
        let prf = precision_recall_f(self.tp, self.fp, self.n_gt);
        AgnosticScores {
            images: self.images,
            n_gt: self.n_gt,
            tp: self.tp,
            fp: self.fp,
            ignored: self.ignored,
            precision: prf.precision,
            recall: prf.recall,
            f_measure: prf.f_measure,
        }
    }
}

#[derive(Debug, Default)]
struct ClassImage {
    n_gt: usize,
    detections: usize,
    ignored: usize,
    /// `(rank score, hit)` best first.
    ranked: Vec<(f64, bool)>,
}

#[derive(Debug)]
struct ImageEval {
    agnostic: Counts,
    scripts: BTreeSet<ScriptClass>,
    classes: BTreeMap<ScriptClass, ClassImage>,
    nonconvex: usize,
}

fn regions<'a>(
    gts: impl Iterator<Item = &'a GroundTruthRecord>,
    scorable: impl Fn(&GroundTruthRecord) -> bool,
) -> Vec<GtRegion> {
    gts.filter(|g| g.dont_care || scorable(g))
        .map(|g| GtRegion {
            quad: g.quad,
            dont_care: g.dont_care,
        })
        .collect()
}

/// Stable descending sort by score.
fn ranked_by<T>(items: &mut [(f64, &T)]) {
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
}

fn eval_image(
    gts: &[GroundTruthRecord],
    dets: &[DetectionRecord],
    assignments: Option<&Assignments>,
    split: &ClassSplit,
    config: &EvalConfig,
) -> Result<ImageEval, MetricsError> {
    let nonconvex =
        gts.iter().filter(|g| !g.quad.is_convex()).count() + dets.iter().filter(|d| !d.quad.is_convex()).count();

    let mut by_conf: Vec<(f64, &DetectionRecord)> = dets.iter().map(|d| (d.confidence, d)).collect();
    ranked_by(&mut by_conf);
    let quads: Vec<_> = by_conf.iter().map(|(_, d)| d.quad).collect();
    let all = match_detections(&quads, &regions(gts.iter(), |_| true), config.iou_thresh)?;
    let agnostic = Counts {
        images: 1,
        n_gt: all.n_care_gt,
        tp: all.tp(),
        fp: all.fp(),
        ignored: all.ignored(),
    };

    let scripts: BTreeSet<ScriptClass> = gts
        .iter()
        .filter(|g| !g.dont_care && split.unseen().contains(&g.script))
        .map(|g| g.script.clone())
        .collect();

    let mut classes = BTreeMap::new();
    if let Some(assignments) = assignments {
        let mut assigned = Vec::with_capacity(dets.len());
        for det in dets {
            let missing = || MetricsError::MissingAssignment {
                image_id: det.image_id.clone(),
                region_id: det.region_id.clone(),
            };
            let region_id = det.region_id.as_ref().ok_or_else(missing)?;
            let a = assignments
                .get(&(det.image_id.clone(), region_id.clone()))
                .ok_or_else(missing)?;
            assigned.push((det, a));
        }

        for class in split.unseen() {
            let mut ranked: Vec<(f64, &DetectionRecord)> = assigned
                .iter()
                .filter(|(_, a)| &a.script == class)
                .map(|(d, a)| (rank_score(d.confidence, a.similarity, config.score_mode), *d))
                .collect();
            ranked_by(&mut ranked);
            let quads: Vec<_> = ranked.iter().map(|(_, d)| d.quad).collect();
            let m = match_detections(&quads, &regions(gts.iter(), |g| &g.script == class), config.iou_thresh)?;
            let hits = m
                .detections
                .iter()
                .zip(&ranked)
                .filter_map(|(dm, (score, _))| match dm.outcome {
                    super::Outcome::TruePositive { .. } => Some((*score, true)),
                    super::Outcome::FalsePositive => Some((*score, false)),
                    super::Outcome::Ignored { .. } => None,
                })
                .collect();
            classes.insert(
                class.clone(),
                ClassImage {
                    n_gt: m.n_care_gt,
                    detections: ranked.len(),
                    ignored: m.ignored(),
                    ranked: hits,
                },
            );
        }
    }

    Ok(ImageEval {
        agnostic,
        scripts,
        classes,
        nonconvex,
    })
}

/// Scores `detections` against `dataset`.
///
/// Class-agnostic precision/recall/f-measure is reported over all selected
/// images and over the images containing each unseen script. When
/// `assignments` is given, each detection also joins the ranked list of its
/// assigned script and per-class 11-point AP plus mAP over the unseen
/// scripts are reported.
pub fn evaluate(
    dataset: &Dataset,
    detections: &DetectionSet,
    assignments: Option<&Assignments>,
    split: &ClassSplit,
    config: &EvalConfig,
) -> Result<EvalReport, MetricsError> {
    check_threshold(config.iou_thresh).map_err(|_| MetricsError::InvalidThreshold(config.iou_thresh))?;

    let selected = select_images(dataset, split, config.image_filter);
    let no_dets: Vec<DetectionRecord> = Vec::new();
    let per_image: Vec<ImageEval> = selected
        .par_iter()
        .map(|id| {
            let dets = detections.get(*id).unwrap_or(&no_dets);
            eval_image(&dataset.images[*id], dets, assignments, split, config)
        })
        .collect::<Result<_, _>>()?;

    let detections_without_ground_truth = detections
        .iter()
        .filter(|(id, _)| !dataset.images.contains_key(*id))
        .map(|(_, d)| d.len())
        .sum();
    let images = ImageCounts {
        total: dataset.images.len(),
        evaluated: selected.len(),
        detections: selected.iter().map(|id| detections.get(*id).map_or(0, Vec::len)).sum(),
        detections_without_ground_truth,
    };

    let mut combined = Counts::default();
    let mut per_script: BTreeMap<String, Counts> = split
        .unseen()
        .iter()
        .map(|c| (c.to_string(), Counts::default()))
        .collect();
    for img in &per_image {
        combined.add(&img.agnostic);
        for script in &img.scripts {
            if let Some(c) = per_script.get_mut(script.as_str()) {
                c.add(&img.agnostic);
            }
        }
    }

    let class_aware = match assignments {
        None => None,
        Some(_) => {
            let mut per_class = BTreeMap::new();
            let mut aps = BTreeMap::new();
            for class in split.unseen() {
                let mut n_gt = 0;
                let mut dets = 0;
                let mut ignored = 0;
                let mut ranked: Vec<(f64, bool)> = Vec::new();
                for img in &per_image {
                    let ci = &img.classes[class];
                    n_gt += ci.n_gt;
                    dets += ci.detections;
                    ignored += ci.ignored;
                    ranked.extend_from_slice(&ci.ranked);
                }
                // Stable: ties keep image order, then rank within the image.
                ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
                let hits: Vec<bool> = ranked.iter().map(|(_, h)| *h).collect();
                let ap = ap_11point(&hits, n_gt, config.empty_class_ap);
                aps.insert(class.clone(), ap);
                let tp = hits.iter().filter(|h| **h).count();
                per_class.insert(
                    class.to_string(),
                    ClassScores {
                        ap,
                        n_gt,
                        detections: dets,
                        tp,
                        fp: hits.len() - tp,
                        ignored,
                    },
                );
            }
            let map = mean_ap(&aps, split.unseen())?;
            Some(ClassAwareScores { per_class, map })
        }
    };

    Ok(EvalReport {
        config: ConfigEcho {
            iou_thresh: config.iou_thresh,
            score_mode: config.score_mode,
            empty_class_ap: config.empty_class_ap,
            image_filter: config.image_filter,
            seen: split.seen().iter().map(|c| c.to_string()).collect(),
            unseen: split.unseen().iter().map(|c| c.to_string()).collect(),
        },
        images,
        class_aware,
        combined: combined.scores(),
        per_script: per_script.into_iter().map(|(k, c)| (k, c.scores())).collect(),
        diagnostics: Diagnostics {
            nonconvex_quads: per_image.iter().map(|i| i.nonconvex).sum(),
        },
    })
}
