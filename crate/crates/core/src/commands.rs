//! The CLI subcommands. Each reads its inputs from a [`RunConfig`], writes
//! its artifacts into the configured output directory and returns a summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{
    load_class_embeddings, load_detections, load_embeddings, load_gt_dir, load_image_manifest, write_detections,
    ClassSplit, Dataset, DetectionSet, LoadStats, ParseMode, ParseOptions, ScriptClass, SplitCategory,
};
use crate::classifier::{assign_detections, Assignments, ClassEmbeddingTable, ScriptAssignment};
use crate::config::{AllowedClasses, RunConfig};
use crate::crossscript::{
    box_plot_svg, box_stats_all, one_test_train_rest, one_train_test_rest, proximity_edges, proximity_svg,
    FMeasureMatrix, Proximity, ScriptBox,
};
use crate::geometry::{crop_spec_for_quad, CropSpec, GeometryError, Point2};
use crate::metrics::{evaluate, EvalConfig, EvalReport};
use crate::nms::nms;

pub const VALIDATE_JSON: &str = "validate.json";
pub const NMS_DETECTIONS: &str = "nms_detections.txt";
pub const CROP_SPECS_CSV: &str = "crop_specs.csv";
pub const ASSIGNMENTS_CSV: &str = "assignments.csv";
pub const REPORT_JSON: &str = "report.json";
pub const PER_CLASS_CSV: &str = "per_class.csv";
pub const PROXIMITY_JSON: &str = "proximity.json";
pub const BOX_STATS_CSV: &str = "box_stats.csv";
pub const PROXIMITY_SVG: &str = "proximity.svg";
pub const BOX_TRAIN_SVG: &str = "box_train_one_test_rest.svg";
pub const BOX_TEST_SVG: &str = "box_test_one_train_rest.svg";

fn parse_options(cfg: &RunConfig) -> ParseOptions {
    ParseOptions {
        mode: cfg.parse_mode,
        split: cfg.split.clone(),
    }
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let path = path.as_deref().ok_or_else(|| anyhow!("no {what} configured"))?;
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(path)
}

fn write_output(cfg: &RunConfig, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let path = cfg.out_dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn load_dataset(cfg: &RunConfig) -> Result<(Dataset, LoadStats)> {
    let dir = required(&cfg.gt_dir, "ground-truth directory")?;
    let (mut dataset, stats) = load_gt_dir(dir, &parse_options(cfg))?;
    if let Some(images) = &cfg.images {
        dataset.meta = load_image_manifest(images)?;
    }
    Ok((dataset, stats))
}

/// Detection region ids, filling missing ones with `<image_id>_<index>`
/// (index within the image, in file order).
pub fn fill_region_ids(set: &mut DetectionSet) {
    for (image_id, dets) in set.iter_mut() {
        for (i, det) in dets.iter_mut().enumerate() {
            det.region_id.get_or_insert_with(|| format!("{image_id}_{i}"));
        }
    }
}

fn load_dets(cfg: &RunConfig) -> Result<(DetectionSet, LoadStats)> {
    let path = required(&cfg.detections, "detections")?;
    Ok(load_detections(path, cfg.detection_layout, &parse_options(cfg))?)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScriptCounts {
    pub category: String,
    pub instances: usize,
    pub dont_care: usize,
    /// Images holding at least one scorable instance of the script.
    pub images: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectionSummary {
    pub images: usize,
    pub parse: LoadStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidateSummary {
    pub parse_mode: ParseMode,
    pub images: usize,
    pub instances: usize,
    pub dont_care: usize,
    pub ground_truth: LoadStats,
    pub scripts: BTreeMap<String, ScriptCounts>,
    pub seen_images: BTreeMap<String, usize>,
    pub unseen_images: BTreeMap<String, usize>,
    pub images_without_size: usize,
    pub detections: Option<DetectionSummary>,
}

fn category_name(split: &ClassSplit, script: &ScriptClass) -> &'static str {
    match split.category(script) {
        Some(SplitCategory::Seen) => "seen",
        Some(SplitCategory::Unseen) => "unseen",
        Some(SplitCategory::Ignored) => "ignored",
        None => "unknown",
    }
}

/// Parses the ground truth (and detections when configured) and writes
/// per-script counts to `validate.json`.
pub fn cmd_validate(cfg: &RunConfig) -> Result<ValidateSummary> {
    let (dataset, gt_stats) = load_dataset(cfg)?;

    let mut scripts: BTreeMap<String, ScriptCounts> = BTreeMap::new();
    for class in cfg.split.classes() {
        scripts.entry(class.to_string()).or_default().category = category_name(&cfg.split, class).into();
    }
    let mut instances = 0;
    let mut dont_care = 0;
    for records in dataset.images.values() {
        let mut present = BTreeSet::new();
        for r in records {
            let entry = scripts.entry(r.script.to_string()).or_default();
            entry.category = category_name(&cfg.split, &r.script).into();
            instances += 1;
            if r.dont_care {
                entry.dont_care += 1;
                dont_care += 1;
            } else {
                entry.instances += 1;
                present.insert(r.script.as_str());
            }
        }
        for s in present {
            scripts.get_mut(s).expect("inserted above").images += 1;
        }
    }
    let images_of = |set: &BTreeSet<ScriptClass>| {
        set.iter()
            .map(|c| (c.to_string(), scripts.get(c.as_str()).map_or(0, |s| s.images)))
            .collect()
    };

    let detections = match &cfg.detections {
        Some(_) => {
            let (set, parse) = load_dets(cfg)?;
            Some(DetectionSummary {
                images: set.len(),
                parse,
            })
        }
        None => None,
    };

    let summary = ValidateSummary {
        parse_mode: cfg.parse_mode,
        images: dataset.images.len(),
        instances,
        dont_care,
        seen_images: images_of(cfg.split.seen()),
        unseen_images: images_of(cfg.split.unseen()),
        images_without_size: if dataset.meta.is_empty() {
            0
        } else {
            dataset
                .images
                .keys()
                .filter(|id| !dataset.meta.contains_key(*id))
                .count()
        },
        ground_truth: gt_stats,
        scripts,
        detections,
    };
    write_output(cfg, VALIDATE_JSON, &json_string(&summary)?)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NmsSummary {
    pub images: usize,
    pub before: usize,
    pub after: usize,
}

/// Per-image NMS; writes the survivors in the combined layout.
pub fn cmd_nms(cfg: &RunConfig) -> Result<NmsSummary> {
    let (set, _) = load_dets(cfg)?;
    let kept: Vec<(String, Vec<_>)> = set
        .par_iter()
        .map(|(id, dets)| Ok((id.clone(), nms(dets, cfg.nms_iou, cfg.nms_score)?)))
        .collect::<Result<_>>()?;
    let before = set.values().map(Vec::len).sum();
    let kept: DetectionSet = kept.into_iter().collect();
    let after = kept.values().map(Vec::len).sum();

    let mut buf = Vec::new();
    write_detections(&mut buf, &kept)?;
    write_output(cfg, NMS_DETECTIONS, &String::from_utf8(buf)?)?;
    Ok(NmsSummary {
        images: set.len(),
        before,
        after,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CropSummary {
    pub regions: usize,
    pub clamped: usize,
    pub outside: usize,
    /// Detections of images absent from the manifest (lenient mode only).
    pub unknown_image: usize,
}

/// One row of `crop_specs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropRow {
    pub image_id: String,
    pub region_id: String,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub angle_rad: f64,
    pub clamped: bool,
}

impl CropRow {
    pub fn spec(&self) -> CropSpec {
        CropSpec::canonical(Point2::new(self.cx, self.cy), self.w, self.h, self.angle_rad)
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.image_id.clone(),
            self.region_id.clone(),
            self.cx.to_string(),
            self.cy.to_string(),
            self.w.to_string(),
            self.h.to_string(),
            self.angle_rad.to_string(),
            self.clamped.to_string(),
        ]
    }
}

const CROP_HEADER: [&str; 8] = ["image_id", "region_id", "cx", "cy", "w", "h", "angle_rad", "clamped"];

/// Reads a crop-spec CSV as written by [`cmd_crop_specs`].
pub fn load_crop_specs(reader: impl Read) -> Result<Vec<CropRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    if rdr.headers()?.iter().ne(CROP_HEADER) {
        bail!("crop-spec header must be {}", CROP_HEADER.join(","));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("crop-spec row {}", i + 2)))
        .collect()
}

/// Rotated crop rectangle per detection, for the embedding extractor.
pub fn cmd_crop_specs(cfg: &RunConfig) -> Result<CropSummary> {
    let images = required(&cfg.images, "image manifest")?;
    let meta = load_image_manifest(images)?;
    let (mut set, _) = load_dets(cfg)?;
    fill_region_ids(&mut set);

    let mut rows = Vec::new();
    let mut summary = CropSummary {
        regions: 0,
        clamped: 0,
        outside: 0,
        unknown_image: 0,
    };
    for (image_id, dets) in &set {
        let Some(m) = meta.get(image_id) else {
            if cfg.parse_mode == ParseMode::Lenient {
                warn!(
                    "skipping {} detections of {image_id}: not in the image manifest",
                    dets.len()
                );
                summary.unknown_image += dets.len();
                continue;
            }
            bail!("image {image_id} missing from the image manifest");
        };
        for det in dets {
            let region_id = det.region_id.as_deref().unwrap_or_default();
            let crop = match crop_spec_for_quad(&det.quad, m, cfg.padding) {
                Ok(c) => c,
                Err(e @ GeometryError::QuadOutsideImage { .. }) if cfg.parse_mode == ParseMode::Lenient => {
                    warn!("skipping {image_id}/{region_id}: {e}");
                    summary.outside += 1;
                    continue;
                }
                Err(e) => return Err(anyhow!(e).context(format!("region {region_id} of image {image_id}"))),
            };
            summary.regions += 1;
            summary.clamped += usize::from(crop.clamped);
            let s = crop.spec;
            rows.push(CropRow {
                image_id: image_id.clone(),
                region_id: region_id.to_string(),
                cx: s.center.x,
                cy: s.center.y,
                w: s.width,
                h: s.height,
                angle_rad: s.angle,
                clamped: crop.clamped,
            });
        }
    }
    let text = csv_string(&CROP_HEADER, rows.iter().map(CropRow::record))?;
    write_output(cfg, CROP_SPECS_CSV, &text)?;
    Ok(summary)
}

fn allowed_classes(cfg: &RunConfig) -> BTreeSet<ScriptClass> {
    match cfg.allowed_classes {
        AllowedClasses::Unseen => cfg.split.unseen().clone(),
        AllowedClasses::All => cfg.split.classes().cloned().collect(),
    }
}

fn load_table(cfg: &RunConfig) -> Result<ClassEmbeddingTable> {
    let path = required(&cfg.class_embeddings, "class embedding table")?;
    Ok(load_class_embeddings(open(path)?, &cfg.split)?)
}

fn classify_set(cfg: &RunConfig, set: &DetectionSet) -> Result<Assignments> {
    let embeddings = load_embeddings(open(required(&cfg.embeddings, "region embeddings")?)?)?;
    let table = load_table(cfg)?;
    let run = assign_detections(set, &embeddings, &table, &allowed_classes(cfg), cfg.score_mode)?;
    if let Some((image_id, region_id)) = run.unresolved.first() {
        let msg = format!(
            "{} detections have no embedding, first is {image_id}/{}",
            run.unresolved.len(),
            region_id.as_deref().unwrap_or("?")
        );
        if cfg.parse_mode == ParseMode::Strict {
            bail!(msg);
        }
        warn!("{msg}");
    }
    Ok(run.assignments)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassifySummary {
    pub regions: usize,
    pub per_class: BTreeMap<String, usize>,
}

/// Nearest-class script assignment for every detection region.
pub fn cmd_classify(cfg: &RunConfig) -> Result<ClassifySummary> {
    let (mut set, _) = load_dets(cfg)?;
    fill_region_ids(&mut set);
    let assignments = classify_set(cfg, &set)?;

    let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
    let rows = assignments.values().map(|a: &ScriptAssignment| {
        *per_class.entry(a.script.to_string()).or_default() += 1;
        vec![
            a.image_id.clone(),
            a.region_id.clone(),
            a.script.to_string(),
            a.similarity.to_string(),
            a.rank_score.to_string(),
        ]
    });
    let text = csv_string(&["image_id", "region_id", "script", "similarity", "rank_score"], rows)?;
    write_output(cfg, ASSIGNMENTS_CSV, &text)?;
    Ok(ClassifySummary {
        regions: assignments.len(),
        per_class,
    })
}

/// Full evaluation; writes `report.json` and, when class-aware scores are
/// available, `per_class.csv`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvalReport> {
    let (dataset, _) = load_dataset(cfg)?;
    let (mut set, _) = load_dets(cfg)?;
    fill_region_ids(&mut set);

    let assignments = if cfg.embeddings.is_some() || cfg.class_embeddings.is_some() {
        Some(classify_set(cfg, &set)?)
    } else {
        info!("no embeddings configured; reporting class-agnostic scores only");
        None
    };

    let eval_cfg = EvalConfig {
        iou_thresh: cfg.iou_thresh,
        score_mode: cfg.score_mode,
        empty_class_ap: cfg.empty_class_ap,
        image_filter: cfg.image_filter,
    };
    let report = evaluate(&dataset, &set, assignments.as_ref(), &cfg.split, &eval_cfg)?;
    write_output(cfg, REPORT_JSON, &json_string(&report)?)?;

    if let Some(ca) = &report.class_aware {
        let rows = ca.per_class.iter().map(|(class, s)| {
            vec![
                class.clone(),
                s.ap.to_string(),
                s.n_gt.to_string(),
                s.detections.to_string(),
                s.tp.to_string(),
                s.fp.to_string(),
                s.ignored.to_string(),
            ]
        });
        let text = csv_string(&["script", "ap", "n_gt", "detections", "tp", "fp", "ignored"], rows)?;
        write_output(cfg, PER_CLASS_CSV, &text)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub close: f64,
    pub loose: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximityReport {
    pub thresholds: Thresholds,
    pub close: Vec<Proximity>,
    pub loose: Vec<Proximity>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeSummary {
    pub proximity: ProximityReport,
    pub train_one_test_rest: Vec<ScriptBox>,
    pub test_one_train_rest: Vec<ScriptBox>,
}

fn box_rows(aggregation: &str, boxes: &[ScriptBox]) -> Vec<Vec<String>> {
    boxes
        .iter()
        .map(|b| {
            let s = &b.stats;
            let outliers: Vec<String> = s.outliers.iter().map(|o| format!("{}:{}", o.label, o.value)).collect();
            vec![
                aggregation.to_string(),
                b.script.clone(),
                s.n.to_string(),
                s.mean.to_string(),
                s.median.to_string(),
                s.q1.to_string(),
                s.q3.to_string(),
                s.whisker_low.to_string(),
                s.whisker_high.to_string(),
                outliers.join(";"),
            ]
        })
        .collect()
}

/// Cross-script analysis of an f-measure matrix: proximity edges at both
/// thresholds, box statistics for rows and columns, and SVG renderings.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeSummary> {
    let path = required(&cfg.matrix, "f-measure matrix")?;
    let m = FMeasureMatrix::from_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;

    let proximity = ProximityReport {
        thresholds: Thresholds {
            close: cfg.close,
            loose: cfg.loose,
        },
        close: proximity_edges(&m, cfg.close)?,
        loose: proximity_edges(&m, cfg.loose)?,
    };
    let train = box_stats_all(&one_train_test_rest(&m))?;
    let test = box_stats_all(&one_test_train_rest(&m))?;

    write_output(cfg, PROXIMITY_JSON, &json_string(&proximity)?)?;
    let mut rows = box_rows("train_one_test_rest", &train);
    rows.extend(box_rows("test_one_train_rest", &test));
    let text = csv_string(
        &[
            "aggregation",
            "script",
            "n",
            "mean",
            "median",
            "q1",
            "q3",
            "whisker_low",
            "whisker_high",
            "outliers",
        ],
        rows,
    )?;
    write_output(cfg, BOX_STATS_CSV, &text)?;
    write_output(cfg, PROXIMITY_SVG, &proximity_svg(&m, cfg.close, cfg.loose))?;
    write_output(
        cfg,
        BOX_TRAIN_SVG,
        &box_plot_svg("Trained on one script, tested on the rest", &train),
    )?;
    write_output(
        cfg,
        BOX_TEST_SVG,
        &box_plot_svg("Tested on one script, trained on the rest", &test),
    )?;

    Ok(AnalyzeSummary {
        proximity,
        train_one_test_rest: train,
        test_one_train_rest: test,
    })
}
