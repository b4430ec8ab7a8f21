//! Directory-level loading of ground truth, detections and image sizes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::parse::{parse_detection_text, parse_gt_text, Parsed, SkippedLine};
use super::{ClassSplit, DetectionRecord, GroundTruthRecord, ImageMeta, ParseError, ParseOptions, SplitCategory};
use crate::geometry::GeometryError;

pub const GT_PREFIX: &str = "gt_";
pub const DET_PREFIX: &str = "res_";

/// Ground truth keyed by image id, plus optional image sizes.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub images: BTreeMap<String, Vec<GroundTruthRecord>>,
    pub meta: BTreeMap<String, ImageMeta>,
}

pub type DetectionSet = BTreeMap<String, Vec<DetectionRecord>>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionLayout {
    /// One `res_<image_id>.txt` per image in a directory.
    PerImage,
    /// A single file with a leading image id column.
    #[default]
    Combined,
}

/// Which images take part in an unseen-script evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageFilter {
    /// Images with at least one unseen-script instance and no seen-script
    /// instance (don't-care records are not considered).
    #[default]
    UnseenOnly,
    All,
}

/// Per-run parsing counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub files: usize,
    pub records: usize,
    pub skipped_lines: usize,
    pub malformed_lines: usize,
    pub degenerate_quads: usize,
    pub unknown_scripts: usize,
    pub out_of_range_scores: usize,
}

impl LoadStats {
    fn absorb<T>(&mut self, parsed: &Parsed<T>) {
        self.files += 1;
        self.records += parsed.records.len();
        self.skipped_lines += parsed.skipped.len();
        for SkippedLine { error, .. } in &parsed.skipped {
            match error.root() {
                ParseError::Geometry(GeometryError::DegenerateQuad(_))
                | ParseError::Geometry(GeometryError::NonFinite) => self.degenerate_quads += 1,
                ParseError::UnknownScript(_) => self.unknown_scripts += 1,
                ParseError::ConfidenceOutOfRange(_) => self.out_of_range_scores += 1,
                _ => self.malformed_lines += 1,
            }
        }
    }
}

fn read_text(path: &Path) -> Result<String, ParseError> {
    fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `(image_id, path)` for files named `<prefix><image_id>.txt`, sorted.
fn list_prefixed(dir: &Path, prefix: &str) -> Result<Vec<(String, PathBuf)>, ParseError> {
    let entries = fs::read_dir(dir).map_err(|source| ParseError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ParseError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(id) = name.strip_prefix(prefix).and_then(|rest| rest.strip_suffix(".txt")) {
            if !id.is_empty() {
                out.push((id.to_string(), entry.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Parses every `gt_<image_id>.txt` under `dir`. Files are parsed in
/// parallel; results are merged in image id order.
pub fn load_gt_dir(dir: &Path, opts: &ParseOptions) -> Result<(Dataset, LoadStats), ParseError> {
    let files = list_prefixed(dir, GT_PREFIX)?;
    let parsed: Vec<Result<(String, Parsed<GroundTruthRecord>), ParseError>> = files
        .par_iter()
        .map(|(id, path)| {
            let text = read_text(path)?;
            let parsed = parse_gt_text(id, &path.display().to_string(), &text, opts)?;
            Ok((id.clone(), parsed))
        })
        .collect();

    let mut dataset = Dataset::default();
    let mut stats = LoadStats::default();
    for item in parsed {
        let (id, parsed) = item?;
        stats.absorb(&parsed);
        dataset.images.insert(id, parsed.records);
    }
    Ok((dataset, stats))
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    image_id: String,
    width: u32,
    height: u32,
}

/// Reads an `image_id,width,height` CSV (with header).
pub fn load_image_manifest(path: &Path) -> Result<BTreeMap<String, ImageMeta>, ParseError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = BTreeMap::new();
    for (idx, row) in reader.deserialize::<ManifestRow>().enumerate() {
        let location = path.display().to_string();
        let row = row.map_err(|e| ParseError::from(e).at(location.clone(), idx + 2))?;
        let meta = ImageMeta::new(&row.image_id, row.width, row.height).map_err(|e| e.at(location, idx + 2))?;
        out.insert(row.image_id, meta);
    }
    Ok(out)
}

pub fn load_detections(
    path: &Path,
    layout: DetectionLayout,
    opts: &ParseOptions,
) -> Result<(DetectionSet, LoadStats), ParseError> {
    let mut set = DetectionSet::new();
    let mut stats = LoadStats::default();
    match layout {
        DetectionLayout::Combined => {
            let text = read_text(path)?;
            let parsed = parse_detection_text(None, &path.display().to_string(), &text, opts)?;
            stats.absorb(&parsed);
            for det in parsed.records {
                set.entry(det.image_id.clone()).or_default().push(det);
            }
        }
        DetectionLayout::PerImage => {
            let files = list_prefixed(path, DET_PREFIX)?;
            let parsed: Vec<Result<(String, Parsed<DetectionRecord>), ParseError>> = files
                .par_iter()
                .map(|(id, file)| {
                    let text = read_text(file)?;
                    let parsed = parse_detection_text(Some(id), &file.display().to_string(), &text, opts)?;
                    Ok((id.clone(), parsed))
                })
                .collect();
            for item in parsed {
                let (id, parsed) = item?;
                stats.absorb(&parsed);
                set.insert(id, parsed.records);
            }
        }
    }
    Ok((set, stats))
}

/// Writes detections in the combined layout, ordered by image id.
pub fn write_detections(mut writer: impl Write, set: &DetectionSet) -> std::io::Result<()> {
    for dets in set.values() {
        for det in dets {
            writeln!(writer, "{}", det.to_line(true))?;
        }
    }
    Ok(())
}

/// Image ids kept by `filter`, in id order.
pub fn select_images<'a>(dataset: &'a Dataset, split: &ClassSplit, filter: ImageFilter) -> Vec<&'a str> {
    dataset
        .images
        .iter()
        .filter(|(_, records)| match filter {
            ImageFilter::All => true,
            ImageFilter::UnseenOnly => {
                let mut unseen = false;
                for rec in records.iter().filter(|r| !r.dont_care) {
                    match split.category(&rec.script) {
                        Some(SplitCategory::Seen) => return false,
                        Some(SplitCategory::Unseen) => unseen = true,
                        _ => {}
                    }
                }
                unseen
            }
        })
        .map(|(id, _)| id.as_str())
        .collect()
}
