//! Ground-truth, detection and embedding file formats.
//!
//! Ground truth follows the MLT layout: one `gt_<image_id>.txt` per image,
//! each line `x1,y1,x2,y2,x3,y3,x4,y4,script,transcription`.

mod dataset;
mod embedding;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Quad, QuadMode};

pub use dataset::{
    load_detections, load_gt_dir, load_image_manifest, select_images, write_detections, Dataset, DetectionLayout,
    DetectionSet, ImageFilter, LoadStats,
};
pub use embedding::{load_class_embeddings, load_embeddings, write_embeddings};
pub use parse::{
    parse_combined_detection_line, parse_detection_line, parse_detection_text, parse_gt_line, parse_gt_text, strip_bom,
    Parsed, SkippedLine,
};

/// Transcription marking a region that is excluded from scoring.
pub const DONT_CARE_TRANSCRIPTION: &str = "###";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("unknown script {0:?}")]
    UnknownScript(String),
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("malformed header {0:?}, expected `dim <D>`")]
    MalformedHeader(String),
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate region id {0:?}")]
    DuplicateRegionId(String),
    #[error("duplicate class {0:?}")]
    DuplicateClass(String),
    #[error("non-finite value in row {0:?}")]
    NonFiniteValue(String),
    #[error("class {0:?} missing from class embedding table")]
    MissingClass(String),
    #[error("invalid image size {width}x{height}")]
    InvalidImageSize { width: u32, height: u32 },
    #[error("invalid class split: {0}")]
    InvalidSplit(String),
    #[error("{location}:{line}: {source}")]
    Located {
        location: String,
        line: usize,
        #[source]
        source: Box<ParseError>,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ParseError {
    pub fn at(self, location: impl Into<String>, line: usize) -> Self {
        ParseError::Located {
            location: location.into(),
            line,
            source: Box::new(self),
        }
    }

    /// The error without file/line context.
    pub fn root(&self) -> &ParseError {
        match self {
            ParseError::Located { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Canonical (trimmed, lowercase) script label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScriptClass(String);

impl ScriptClass {
    pub fn new(name: &str) -> Result<Self, ParseError> {
        let canon = name.trim().to_lowercase();
        if canon.is_empty() {
            return Err(ParseError::UnknownScript(name.to_string()));
        }
        Ok(Self(canon))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ScriptClass {
    type Error = ParseError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<ScriptClass> for String {
    fn from(value: ScriptClass) -> Self {
        value.0
    }
}

impl fmt::Display for ScriptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which side of the split a class falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitCategory {
    Seen,
    Unseen,
    Ignored,
}

/// Seen/unseen partition of the script vocabulary, plus labels whose
/// records are always don't-care.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassSplit {
    seen: BTreeSet<ScriptClass>,
    unseen: BTreeSet<ScriptClass>,
    ignore: BTreeSet<ScriptClass>,
}

impl ClassSplit {
    pub fn new<S: AsRef<str>>(seen: &[S], unseen: &[S], ignore: &[S]) -> Result<Self, ParseError> {
        let collect = |names: &[S]| -> Result<BTreeSet<ScriptClass>, ParseError> {
            names.iter().map(|n| ScriptClass::new(n.as_ref())).collect()
        };
        let seen = collect(seen)?;
        let unseen = collect(unseen)?;
        let ignore = collect(ignore)?;
        if unseen.is_empty() {
            return Err(ParseError::InvalidSplit("unseen set is empty".into()));
        }
        if let Some(c) = seen.intersection(&unseen).next() {
            return Err(ParseError::InvalidSplit(format!("{c} is both seen and unseen")));
        }
        if let Some(c) = ignore.iter().find(|c| seen.contains(c) || unseen.contains(c)) {
            return Err(ParseError::InvalidSplit(format!("{c} is both ignored and evaluated")));
        }
        Ok(Self { seen, unseen, ignore })
    }

    /// The MLT2019 split: four seen scripts, three unseen, and the
    /// non-script MLT categories ignored.
    pub fn mlt2019() -> Self {
        Self::new(
            &["latin", "bangla", "arabic", "japanese"],
            &["chinese", "korean", "hindi"],
            &["symbols", "mixed", "none"],
        )
        .expect("built-in split is valid")
    }

    pub fn seen(&self) -> &BTreeSet<ScriptClass> {
        &self.seen
    }

    pub fn unseen(&self) -> &BTreeSet<ScriptClass> {
        &self.unseen
    }

    pub fn ignore(&self) -> &BTreeSet<ScriptClass> {
        &self.ignore
    }

    /// `n = n0 + n1`.
    pub fn n_classes(&self) -> usize {
        self.seen.len() + self.unseen.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ScriptClass> {
        self.seen.iter().chain(self.unseen.iter())
    }

    pub fn category(&self, class: &ScriptClass) -> Option<SplitCategory> {
        if self.seen.contains(class) {
            Some(SplitCategory::Seen)
        } else if self.unseen.contains(class) {
            Some(SplitCategory::Unseen)
        } else if self.ignore.contains(class) {
            Some(SplitCategory::Ignored)
        } else {
            None
        }
    }
}

impl Default for ClassSplit {
    fn default() -> Self {
        Self::mlt2019()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImageMeta {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
}

impl ImageMeta {
    pub fn new(image_id: &str, width: u32, height: u32) -> Result<Self, ParseError> {
        if width == 0 || height == 0 {
            return Err(ParseError::InvalidImageSize { width, height });
        }
        Ok(Self {
            image_id: image_id.to_string(),
            width,
            height,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Any bad line rejects the whole file.
    #[default]
    Strict,
    /// Bad lines are skipped and counted.
    Lenient,
}

impl ParseMode {
    pub fn quad_mode(self) -> QuadMode {
        match self {
            ParseMode::Strict => QuadMode::Strict,
            ParseMode::Lenient => QuadMode::Lenient,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub mode: ParseMode,
    pub split: ClassSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthRecord {
    pub image_id: String,
    pub quad: Quad,
    pub script: ScriptClass,
    pub transcription: String,
    pub dont_care: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub image_id: String,
    pub quad: Quad,
    pub confidence: f64,
    pub region_id: Option<String>,
}
