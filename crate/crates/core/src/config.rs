//! Run configuration: a TOML file, overridden by command-line flags.
//!
//! ```toml
//! [dataset]
//! gt_dir = "gt"                  # gt_<image_id>.txt files
//! images = "images.csv"          # image_id,width,height
//! detections = "dets.txt"
//! detection_layout = "combined"  # or "per-image" (a directory of res_<image_id>.txt)
//! embeddings = "regions.emb"
//! class_embeddings = "classes.emb"
//! matrix = "cross_script.csv"
//!
//! [split]
//! seen = ["latin", "bangla", "arabic", "japanese"]
//! unseen = ["chinese", "korean", "hindi"]
//! ignore = ["symbols", "mixed", "none"]
//!
//! [thresholds]
//! iou = 0.5
//! nms_iou = 0.3
//! nms_score = 0.5
//! close = 0.6
//! loose = 0.3
//!
//! [evaluation]
//! score_mode = "detector"        # detector | similarity | product
//! empty_class_ap = 1.0
//! image_filter = "unseen-only"   # or "all"
//! allowed_classes = "unseen"     # or "all"
//!
//! [parse]
//! mode = "strict"                # or "lenient"
//!
//! [crop]
//! padding = 0.0
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths are resolved against the directory holding the file. Without
//! `[output] dir`, results go to `out/` under the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::annotation::{ClassSplit, DetectionLayout, ImageFilter, ParseMode};
use crate::classifier::ScoreMode;
use crate::crossscript::{DEFAULT_CLOSE_THRESHOLD, DEFAULT_LOOSE_THRESHOLD};
use crate::metrics::DEFAULT_IOU_THRESH;
use crate::nms::{DEFAULT_NMS_IOU, DEFAULT_NMS_SCORE};

/// Which classes the classifier may choose from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllowedClasses {
    #[default]
    Unseen,
    All,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDataset {
    gt_dir: Option<PathBuf>,
    images: Option<PathBuf>,
    detections: Option<PathBuf>,
    detection_layout: Option<DetectionLayout>,
    embeddings: Option<PathBuf>,
    class_embeddings: Option<PathBuf>,
    matrix: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSplit {
    seen: Vec<String>,
    unseen: Vec<String>,
    #[serde(default)]
    ignore: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileThresholds {
    iou: Option<f64>,
    nms_iou: Option<f64>,
    nms_score: Option<f64>,
    close: Option<f64>,
    loose: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEvaluation {
    score_mode: Option<ScoreMode>,
    empty_class_ap: Option<f64>,
    image_filter: Option<ImageFilter>,
    allowed_classes: Option<AllowedClasses>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParse {
    mode: Option<ParseMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCrop {
    padding: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    dataset: FileDataset,
    split: Option<FileSplit>,
    #[serde(default)]
    thresholds: FileThresholds,
    #[serde(default)]
    evaluation: FileEvaluation,
    #[serde(default)]
    parse: FileParse,
    #[serde(default)]
    crop: FileCrop,
    #[serde(default)]
    output: FileOutput,
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub gt_dir: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub detection_layout: Option<DetectionLayout>,
    pub embeddings: Option<PathBuf>,
    pub class_embeddings: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub iou_thresh: Option<f64>,
    pub nms_iou: Option<f64>,
    pub nms_score: Option<f64>,
    pub close: Option<f64>,
    pub loose: Option<f64>,
    pub score_mode: Option<ScoreMode>,
    pub image_filter: Option<ImageFilter>,
    pub parse_mode: Option<ParseMode>,
    pub padding: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gt_dir: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub detection_layout: DetectionLayout,
    pub embeddings: Option<PathBuf>,
    pub class_embeddings: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub split: ClassSplit,
    pub iou_thresh: f64,
    pub nms_iou: f64,
    pub nms_score: f64,
    pub close: f64,
    pub loose: f64,
    pub score_mode: ScoreMode,
    pub empty_class_ap: f64,
    pub image_filter: ImageFilter,
    pub allowed_classes: AllowedClasses,
    pub parse_mode: ParseMode,
    pub padding: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gt_dir: None,
            images: None,
            detections: None,
            detection_layout: DetectionLayout::default(),
            embeddings: None,
            class_embeddings: None,
            matrix: None,
            split: ClassSplit::default(),
            iou_thresh: DEFAULT_IOU_THRESH,
            nms_iou: DEFAULT_NMS_IOU,
            nms_score: DEFAULT_NMS_SCORE,
            close: DEFAULT_CLOSE_THRESHOLD,
            loose: DEFAULT_LOOSE_THRESHOLD,
            score_mode: ScoreMode::default(),
            empty_class_ap: 1.0,
            image_filter: ImageFilter::default(),
            allowed_classes: AllowedClasses::default(),
            parse_mode: ParseMode::default(),
            padding: 0.0,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn resolve(base: &Path, p: Option<PathBuf>) -> Option<PathBuf> {
    p.map(|p| if p.is_relative() { base.join(p) } else { p })
}

impl RunConfig {
    /// Builds a config from an optional TOML file plus overrides, then validates it.
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                Self::from_toml(&text, path.parent().unwrap_or(Path::new("")))
                    .with_context(|| format!("in config {}", path.display()))?
            }
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config file; relative paths are joined onto `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text)?;
        let d = Self::default();
        let split = match file.split {
            Some(s) => ClassSplit::new(&s.seen, &s.unseen, &s.ignore)?,
            None => d.split,
        };
        Ok(Self {
            gt_dir: resolve(base, file.dataset.gt_dir),
            images: resolve(base, file.dataset.images),
            detections: resolve(base, file.dataset.detections),
            detection_layout: file.dataset.detection_layout.unwrap_or(d.detection_layout),
            embeddings: resolve(base, file.dataset.embeddings),
            class_embeddings: resolve(base, file.dataset.class_embeddings),
            matrix: resolve(base, file.dataset.matrix),
            split,
            iou_thresh: file.thresholds.iou.unwrap_or(d.iou_thresh),
            nms_iou: file.thresholds.nms_iou.unwrap_or(d.nms_iou),
            nms_score: file.thresholds.nms_score.unwrap_or(d.nms_score),
            close: file.thresholds.close.unwrap_or(d.close),
            loose: file.thresholds.loose.unwrap_or(d.loose),
            score_mode: file.evaluation.score_mode.unwrap_or(d.score_mode),
            empty_class_ap: file.evaluation.empty_class_ap.unwrap_or(d.empty_class_ap),
            image_filter: file.evaluation.image_filter.unwrap_or(d.image_filter),
            allowed_classes: file.evaluation.allowed_classes.unwrap_or(d.allowed_classes),
            parse_mode: file.parse.mode.unwrap_or(d.parse_mode),
            padding: file.crop.padding.unwrap_or(d.padding),
            out_dir: resolve(base, file.output.dir).unwrap_or(d.out_dir),
        })
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($field:ident <- $src:ident),* $(,)?) => {
                $(if let Some(v) = o.$src { self.$field = v; })*
            };
        }
        macro_rules! set_some {
            ($($field:ident),* $(,)?) => {
                $(if o.$field.is_some() { self.$field = o.$field; })*
            };
        }
        set_some!(gt_dir, images, detections, embeddings, class_embeddings, matrix);
        set!(
            detection_layout <- detection_layout,
            iou_thresh <- iou_thresh,
            nms_iou <- nms_iou,
            nms_score <- nms_score,
            close <- close,
            loose <- loose,
            score_mode <- score_mode,
            image_filter <- image_filter,
            parse_mode <- parse_mode,
            padding <- padding,
            out_dir <- out_dir,
        );
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("iou", self.iou_thresh),
            ("nms_iou", self.nms_iou),
            ("nms_score", self.nms_score),
            ("close", self.close),
            ("loose", self.loose),
            ("empty_class_ap", self.empty_class_ap),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} = {v} is outside [0, 1]");
            }
        }
        if !(self.padding.is_finite() && self.padding >= 0.0) {
            bail!("padding must be a non-negative number, got {}", self.padding);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file() {
        let cfg = RunConfig::load(None, Overrides::default()).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.iou_thresh, cfg.nms_iou, cfg.nms_score), (0.5, 0.3, 0.5));
    }

    #[test]
    fn file_paths_resolve_against_base() {
        let text = r#"
            [dataset]
            gt_dir = "gt"
            matrix = "/abs/m.csv"
            [split]
            seen = ["latin"]
            unseen = ["hindi"]
            [thresholds]
            iou = 0.7
            [evaluation]
            score_mode = "product"
            image_filter = "all"
        "#;
        let cfg = RunConfig::from_toml(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.gt_dir, Some(PathBuf::from("/data/gt")));
        assert_eq!(cfg.matrix, Some(PathBuf::from("/abs/m.csv")));
        assert_eq!(cfg.iou_thresh, 0.7);
        assert_eq!(cfg.score_mode, ScoreMode::Product);
        assert_eq!(cfg.image_filter, ImageFilter::All);
        assert_eq!(cfg.split.n_classes(), 2);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
        let cfg = RunConfig::from_toml("[output]\ndir = \"res\"\n", Path::new("/data")).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("/data/res"));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::from_toml("[thresholds]\nnms_iou = 0.4\n", Path::new(".")).unwrap();
        cfg.apply(Overrides {
            nms_iou: Some(0.2),
            parse_mode: Some(ParseMode::Lenient),
            ..Overrides::default()
        });
        assert_eq!(cfg.nms_iou, 0.2);
        assert_eq!(cfg.parse_mode, ParseMode::Lenient);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[thresholds]\nbogus = 1\n", Path::new(".")).is_err());
        let cfg = RunConfig {
            close: 1.5,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::from_toml("[split]\nseen = [\"a\"]\nunseen = []\n", Path::new(".")).is_err());
    }
}
