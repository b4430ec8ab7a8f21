use super::{
    DetectionRecord, GroundTruthRecord, ParseError, ParseMode, ParseOptions, ScriptClass, SplitCategory,
    DONT_CARE_TRANSCRIPTION,
};
use crate::geometry::Quad;

pub fn strip_bom(text: &str) -> &str {
    text.strip_prefix('\u{feff}').unwrap_or(text)
}

fn parse_coords(fields: &[&str]) -> Result<[f64; 8], ParseError> {
    let mut coords = [0.0; 8];
    for (slot, field) in coords.iter_mut().zip(fields) {
        *slot = field
            .trim()
            .parse::<f64>()
            .map_err(|_| ParseError::MalformedLine(format!("non-numeric coordinate {field:?}")))?;
    }
    Ok(coords)
}

fn format_coords(quad: &Quad) -> String {
    quad.coords()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses one ground-truth line. The transcription is everything after the
/// ninth comma and may itself contain commas.
pub fn parse_gt_line(image_id: &str, line: &str, opts: &ParseOptions) -> Result<GroundTruthRecord, ParseError> {
    let line = strip_bom(line).trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.splitn(10, ',').collect();
    if fields.len() < 10 {
        return Err(ParseError::MalformedLine(format!(
            "expected at least 10 fields, found {}",
            fields.len()
        )));
    }
    let coords = parse_coords(&fields[..8])?;
    let quad = Quad::from_coords(coords, opts.mode.quad_mode())?;
    let script = ScriptClass::new(fields[8])?;
    let category = opts.split.category(&script);
    if category.is_none() && opts.mode == ParseMode::Strict {
        return Err(ParseError::UnknownScript(fields[8].trim().to_string()));
    }
    let transcription = fields[9].to_string();
    let dont_care = transcription == DONT_CARE_TRANSCRIPTION || category == Some(SplitCategory::Ignored);
    Ok(GroundTruthRecord {
        image_id: image_id.to_string(),
        quad,
        script,
        transcription,
        dont_care,
    })
}

impl GroundTruthRecord {
    pub fn to_line(&self) -> String {
        format!("{},{},{}", format_coords(&self.quad), self.script, self.transcription)
    }
}

fn detection_from_fields(image_id: &str, fields: &[&str], opts: &ParseOptions) -> Result<DetectionRecord, ParseError> {
    if !(9..=10).contains(&fields.len()) {
        return Err(ParseError::MalformedLine(format!(
            "expected 9 or 10 detection fields, found {}",
            fields.len()
        )));
    }
    let coords = parse_coords(&fields[..8])?;
    let quad = Quad::from_coords(coords, opts.mode.quad_mode())?;
    let confidence: f64 = fields[8]
        .trim()
        .parse()
        .map_err(|_| ParseError::MalformedLine(format!("non-numeric score {:?}", fields[8])))?;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(ParseError::ConfidenceOutOfRange(confidence));
    }
    let region_id = fields
        .get(9)
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    Ok(DetectionRecord {
        image_id: image_id.to_string(),
        quad,
        confidence,
        region_id,
    })
}

/// Parses `x1,...,y4,score[,region_id]` from a per-image detection file.
pub fn parse_detection_line(image_id: &str, line: &str, opts: &ParseOptions) -> Result<DetectionRecord, ParseError> {
    let line = strip_bom(line).trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.split(',').collect();
    detection_from_fields(image_id, &fields, opts)
}

/// Parses `image_id,x1,...,y4,score[,region_id]` from a combined file.
pub fn parse_combined_detection_line(line: &str, opts: &ParseOptions) -> Result<DetectionRecord, ParseError> {
    let line = strip_bom(line).trim_end_matches(['\r', '\n']);
    let mut fields: Vec<&str> = line.split(',').collect();
    if fields.len() < 2 {
        return Err(ParseError::MalformedLine("missing image id".into()));
    }
    let image_id = fields.remove(0).trim();
    if image_id.is_empty() {
        return Err(ParseError::MalformedLine("empty image id".into()));
    }
    detection_from_fields(image_id, &fields, opts)
}

impl DetectionRecord {
    /// Per-image line, or combined-layout line when `with_image_id`.
    pub fn to_line(&self, with_image_id: bool) -> String {
        let mut line = String::new();
        if with_image_id {
            line.push_str(&self.image_id);
            line.push(',');
        }
        line.push_str(&format_coords(&self.quad));
        line.push(',');
        line.push_str(&self.confidence.to_string());
        if let Some(id) = &self.region_id {
            line.push(',');
            line.push_str(id);
        }
        line
    }
}

#[derive(Debug)]
pub struct SkippedLine {
    pub line: usize,
    pub error: ParseError,
}

/// Records of one file plus the lines lenient mode dropped.
#[derive(Debug)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub skipped: Vec<SkippedLine>,
}

fn parse_lines<T>(
    location: &str,
    text: &str,
    mode: ParseMode,
    mut parse: impl FnMut(&str) -> Result<T, ParseError>,
) -> Result<Parsed<T>, ParseError> {
    let mut out = Parsed {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    for (idx, line) in strip_bom(text).lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse(line) {
            Ok(rec) => out.records.push(rec),
            Err(e) if mode == ParseMode::Lenient => {
                log::warn!("{location}:{}: skipping line: {e}", idx + 1);
                out.skipped.push(SkippedLine {
                    line: idx + 1,
                    error: e,
                });
            }
            Err(e) => return Err(e.at(location, idx + 1)),
        }
    }
    Ok(out)
}

pub fn parse_gt_text(
    image_id: &str,
    location: &str,
    text: &str,
    opts: &ParseOptions,
) -> Result<Parsed<GroundTruthRecord>, ParseError> {
    parse_lines(location, text, opts.mode, |l| parse_gt_line(image_id, l, opts))
}

/// Parses a detection file. `image_id` selects the per-image layout;
/// `None` expects the combined layout with a leading image id column.
pub fn parse_detection_text(
    image_id: Option<&str>,
    location: &str,
    text: &str,
    opts: &ParseOptions,
) -> Result<Parsed<DetectionRecord>, ParseError> {
    parse_lines(location, text, opts.mode, |l| match image_id {
        Some(id) => parse_detection_line(id, l, opts),
        None => parse_combined_detection_line(l, opts),
    })
}
