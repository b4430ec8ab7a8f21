//! Python bindings for `scriptdet-core`.
//!
//! Quads are passed as [`Quad`] objects, everything else as plain Python
//! values (lists, tuples, dicts). Core errors surface as `ValueError`,
//! I/O failures as `OSError`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use scriptdet_core::annotation::{
    self, ClassSplit, DetectionRecord, GroundTruthRecord, ImageMeta, ParseMode, ParseOptions, ScriptClass,
};
use scriptdet_core::classifier::{self, ClassEmbeddingTable, EmbeddingVector, ScoreMode};
use scriptdet_core::commands;
use scriptdet_core::crossscript::{self, FMeasureMatrix};
use scriptdet_core::geometry::{self, CropSpec as CoreCropSpec, Point2, Quad as CoreQuad, QuadMode};
use scriptdet_core::metrics;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn os_err(e: impl Display) -> PyErr {
    PyOSError::new_err(e.to_string())
}

/// A normalized quadrilateral: positive orientation, starting at the vertex
/// with the smallest `x + y`.
#[pyclass(frozen, module = "scriptdet")]
pub struct Quad {
    inner: CoreQuad,
}

#[pymethods]
impl Quad {
    /// `coords` is `[x1, y1, ..., x4, y4]`. With `strict=False` a
    /// self-intersecting vertex order is repaired instead of rejected.
    #[new]
    #[pyo3(signature = (coords, strict = true))]
    fn new(coords: [f64; 8], strict: bool) -> PyResult<Self> {
        let mode = if strict { QuadMode::Strict } else { QuadMode::Lenient };
        Ok(Self {
            inner: CoreQuad::from_coords(coords, mode).map_err(value_err)?,
        })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    #[staticmethod]
    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CoreQuad::rect(x0, y0, x1, y1).map_err(value_err)?,
        })
    }

    fn coords(&self) -> [f64; 8] {
        self.inner.coords()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p.x, p.y)).collect()
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn is_convex(&self) -> bool {
        self.inner.is_convex()
    }

    fn __eq__(&self, other: &Bound<'_, PyAny>) -> bool {
        other.cast::<Quad>().is_ok_and(|o| o.get().inner == self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Quad({:?})", self.inner.coords())
    }
}

/// Rotated rectangle: center, `width >= height`, angle of the width edge in
/// radians within `[0, pi)`. `clamped` is set when the rectangle was cut
/// back to the image bounds.
#[pyclass(frozen, get_all, module = "scriptdet")]
pub struct CropSpec {
    cx: f64,
    cy: f64,
    width: f64,
    height: f64,
    angle: f64,
    clamped: bool,
}

impl CropSpec {
    fn from_core(s: CoreCropSpec, clamped: bool) -> Self {
        Self {
            cx: s.center.x,
            cy: s.center.y,
            width: s.width,
            height: s.height,
            angle: s.angle,
            clamped,
        }
    }

    fn core(&self) -> CoreCropSpec {
        CoreCropSpec::canonical(Point2::new(self.cx, self.cy), self.width, self.height, self.angle)
    }
}

#[pymethods]
impl CropSpec {
    fn corners(&self) -> Vec<(f64, f64)> {
        self.core().corners().iter().map(|p| (p.x, p.y)).collect()
    }

    fn area(&self) -> f64 {
        self.width * self.height
    }

    #[pyo3(signature = (point, tol = 1e-9))]
    fn contains(&self, point: (f64, f64), tol: f64) -> bool {
        self.core().contains(Point2::new(point.0, point.1), tol)
    }

    fn __repr__(&self) -> String {
        format!(
            "CropSpec(cx={}, cy={}, width={}, height={}, angle={}, clamped={})",
            self.cx,
            self.cy,
            self.width,
            self.height,
            self.angle,
            if self.clamped { "True" } else { "False" }
        )
    }
}

#[pyfunction]
fn quad_iou(a: PyRef<'_, Quad>, b: PyRef<'_, Quad>) -> f64 {
    geometry::quad_iou(&a.inner, &b.inner)
}

/// Unsigned shoelace area of a simple polygon.
#[pyfunction]
fn polygon_area(points: Vec<(f64, f64)>) -> f64 {
    let pts: Vec<Point2> = points.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
    geometry::polygon_area(&pts)
}

#[pyfunction]
fn min_area_rect(quad: PyRef<'_, Quad>) -> CropSpec {
    CropSpec::from_core(geometry::min_area_rect(&quad.inner), false)
}

/// Minimum-area rectangle of `quad`, grown by `padding` and clamped to a
/// `width` x `height` image.
#[pyfunction]
#[pyo3(signature = (quad, width, height, padding = 0.0))]
fn crop_spec(quad: PyRef<'_, Quad>, width: u32, height: u32, padding: f64) -> PyResult<CropSpec> {
    let image = ImageMeta::new("image", width, height).map_err(value_err)?;
    let crop = geometry::crop_spec_for_quad(&quad.inner, &image, padding).map_err(value_err)?;
    Ok(CropSpec::from_core(crop.spec, crop.clamped))
}

/// Greedy NMS. Returns the indices of the kept detections, best first.
#[pyfunction]
#[pyo3(signature = (quads, scores, iou_thresh = 0.3, score_thresh = 0.5))]
fn nms(quads: Vec<PyRef<'_, Quad>>, scores: Vec<f64>, iou_thresh: f64, score_thresh: f64) -> PyResult<Vec<usize>> {
    if quads.len() != scores.len() {
        return Err(value_err(format!("{} quads but {} scores", quads.len(), scores.len())));
    }
    let dets: Vec<DetectionRecord> = quads
        .iter()
        .zip(&scores)
        .enumerate()
        .map(|(i, (q, &s))| DetectionRecord {
            image_id: String::new(),
            quad: q.inner,
            confidence: s,
            region_id: Some(i.to_string()),
        })
        .collect();
    let kept = scriptdet_core::nms::nms(&dets, iou_thresh, score_thresh).map_err(value_err)?;
    Ok(kept
        .iter()
        .map(|d| d.region_id.as_deref().and_then(|r| r.parse().ok()).expect("index id"))
        .collect())
}

fn embedding(values: Vec<f64>) -> PyResult<EmbeddingVector> {
    EmbeddingVector::new(values).ok_or_else(|| value_err("embedding has a non-finite component"))
}

fn class(name: &str) -> PyResult<ScriptClass> {
    ScriptClass::new(name).map_err(value_err)
}

fn class_table(table: BTreeMap<String, Vec<f64>>) -> PyResult<ClassEmbeddingTable> {
    let entries = table
        .into_iter()
        .map(|(k, v)| Ok((class(&k)?, embedding(v)?)))
        .collect::<PyResult<_>>()?;
    ClassEmbeddingTable::new(entries).map_err(value_err)
}

#[pyfunction]
fn cosine_similarity(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    classifier::cosine_similarity(&embedding(a)?, &embedding(b)?).map_err(value_err)
}

/// Nearest class by cosine similarity, as `(script, similarity)`. `allowed`
/// defaults to every class in `table`; ties go to the smaller name.
#[pyfunction]
#[pyo3(signature = (v, table, allowed = None))]
fn classify_region(
    v: Vec<f64>,
    table: BTreeMap<String, Vec<f64>>,
    allowed: Option<Vec<String>>,
) -> PyResult<(String, f64)> {
    let table = class_table(table)?;
    let allowed: BTreeSet<ScriptClass> = match allowed {
        Some(names) => names.iter().map(|n| class(n)).collect::<PyResult<_>>()?,
        None => table.classes().cloned().collect(),
    };
    let d = classifier::classify_region(&embedding(v)?, &table, &allowed).map_err(value_err)?;
    Ok((d.script.to_string(), d.similarity))
}

/// `mode` is one of `detector`, `similarity`, `product`.
#[pyfunction]
fn rank_score(confidence: f64, similarity: f64, mode: &str) -> PyResult<f64> {
    let mode: ScoreMode = mode.parse().map_err(value_err)?;
    Ok(classifier::rank_score(confidence, similarity, mode))
}

/// `(precision, recall, f_measure)`.
#[pyfunction]
fn precision_recall_f(tp: usize, fp: usize, n_gt: usize) -> (f64, f64, f64) {
    let pr = metrics::precision_recall_f(tp, fp, n_gt);
    (pr.precision, pr.recall, pr.f_measure)
}

#[pyfunction]
fn f_measure(precision: f64, recall: f64) -> f64 {
    metrics::f_measure(precision, recall)
}

/// 11-point interpolated AP of a ranked TP/FP list.
#[pyfunction]
#[pyo3(signature = (hits, n_gt, empty_ap = 1.0))]
fn ap_11point(hits: Vec<bool>, n_gt: usize, empty_ap: f64) -> f64 {
    metrics::ap_11point(&hits, n_gt, empty_ap)
}

/// Mean of the given per-class APs.
#[pyfunction]
fn mean_ap(per_class: BTreeMap<String, f64>) -> PyResult<f64> {
    let aps: BTreeMap<ScriptClass, f64> = per_class
        .into_iter()
        .map(|(k, v)| Ok((class(&k)?, v)))
        .collect::<PyResult<_>>()?;
    metrics::mean_ap(&aps, aps.keys()).map_err(value_err)
}

#[pyfunction]
fn box_stats<'py>(py: Python<'py>, values: Vec<f64>, labels: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let s = crossscript::box_stats(&values, &labels).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("n", s.n)?;
    d.set_item("mean", s.mean)?;
    d.set_item("median", s.median)?;
    d.set_item("q1", s.q1)?;
    d.set_item("q3", s.q3)?;
    d.set_item("whisker_low", s.whisker_low)?;
    d.set_item("whisker_high", s.whisker_high)?;
    let outliers: Vec<(String, f64)> = s.outliers.into_iter().map(|o| (o.label, o.value)).collect();
    d.set_item("outliers", outliers)?;
    Ok(d)
}

/// Proximity edges of an f-measure matrix given as CSV text: for each
/// training script, `(test_script, f)` pairs with `f >= threshold`.
#[pyfunction]
fn proximity_edges(matrix_csv: &str, threshold: f64) -> PyResult<BTreeMap<String, Vec<(String, f64)>>> {
    let m = FMeasureMatrix::from_csv(matrix_csv.as_bytes()).map_err(value_err)?;
    let edges = crossscript::proximity_edges(&m, threshold).map_err(value_err)?;
    Ok(edges
        .into_iter()
        .map(|p| (p.script, p.close.into_iter().map(|e| (e.script, e.f_measure)).collect()))
        .collect())
}

fn parse_options(strict: bool) -> ParseOptions {
    ParseOptions {
        mode: if strict { ParseMode::Strict } else { ParseMode::Lenient },
        split: ClassSplit::default(),
    }
}

fn gt_dict<'py>(py: Python<'py>, r: GroundTruthRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("image_id", r.image_id)?;
    d.set_item("quad", Quad { inner: r.quad })?;
    d.set_item("script", r.script.to_string())?;
    d.set_item("transcription", r.transcription)?;
    d.set_item("dont_care", r.dont_care)?;
    Ok(d)
}

/// One ground-truth line `x1,y1,...,x4,y4,script,transcription` under the
/// default seen/unseen/ignore split.
#[pyfunction]
#[pyo3(signature = (line, image_id = "", strict = true))]
fn parse_gt_line<'py>(py: Python<'py>, line: &str, image_id: &str, strict: bool) -> PyResult<Bound<'py, PyDict>> {
    let r = annotation::parse_gt_line(image_id, line, &parse_options(strict)).map_err(value_err)?;
    gt_dict(py, r)
}

/// One detection line. Without `image_id` the line must carry it as its
/// first field (combined layout).
#[pyfunction]
#[pyo3(signature = (line, image_id = None, strict = true))]
fn parse_detection_line<'py>(
    py: Python<'py>,
    line: &str,
    image_id: Option<&str>,
    strict: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = parse_options(strict);
    let r = match image_id {
        Some(id) => annotation::parse_detection_line(id, line, &opts),
        None => annotation::parse_combined_detection_line(line, &opts),
    }
    .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("image_id", r.image_id)?;
    d.set_item("quad", Quad { inner: r.quad })?;
    d.set_item("confidence", r.confidence)?;
    d.set_item("region_id", r.region_id)?;
    Ok(d)
}

fn open(path: &str) -> PyResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(os_err)?))
}

/// Region embeddings: `{region_id: [floats]}`.
#[pyfunction]
fn load_embeddings(path: &str) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let m = annotation::load_embeddings(open(path)?).map_err(value_err)?;
    Ok(m.into_iter().map(|(k, v)| (k, v.values().to_vec())).collect())
}

/// Class embedding table; every class of the default split must be present.
#[pyfunction]
fn load_class_embeddings(path: &str) -> PyResult<BTreeMap<String, Vec<f64>>> {
    let t = annotation::load_class_embeddings(open(path)?, &ClassSplit::default()).map_err(value_err)?;
    Ok(t.classes()
        .map(|c| (c.to_string(), t.get(c).expect("listed class").values().to_vec()))
        .collect())
}

/// Writes `{key: [floats]}` in the embedding file format, keys in sorted
/// order. All rows must share one dimension.
#[pyfunction]
fn write_embeddings(path: &str, rows: BTreeMap<String, Vec<f64>>) -> PyResult<()> {
    let dim = rows.values().next().map_or(0, Vec::len);
    if dim == 0 {
        return Err(value_err("no rows, or zero-length rows"));
    }
    let rows: Vec<(String, EmbeddingVector)> = rows
        .into_iter()
        .map(|(k, v)| {
            if v.len() != dim {
                return Err(value_err(format!("row {k} has {} values, expected {dim}", v.len())));
            }
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(value_err(format!("invalid key {k:?}")));
            }
            Ok((k, embedding(v)?))
        })
        .collect::<PyResult<_>>()?;
    let file = File::create(path).map_err(os_err)?;
    annotation::write_embeddings(BufWriter::new(file), dim, rows.iter().map(|(k, v)| (k.as_str(), v))).map_err(os_err)
}

/// Rows of a crop-spec CSV as dicts with keys `image_id, region_id, cx, cy,
/// w, h, angle_rad, clamped`.
#[pyfunction]
fn load_crop_specs<'py>(py: Python<'py>, path: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let rows = commands::load_crop_specs(open(path)?).map_err(|e| value_err(format!("{e:#}")))?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("image_id", r.image_id)?;
            d.set_item("region_id", r.region_id)?;
            d.set_item("cx", r.cx)?;
            d.set_item("cy", r.cy)?;
            d.set_item("w", r.w)?;
            d.set_item("h", r.h)?;
            d.set_item("angle_rad", r.angle_rad)?;
            d.set_item("clamped", r.clamped)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn scriptdet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function to `m`; also used to build the module
/// in an embedded interpreter.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Quad>()?;
    m.add_class::<CropSpec>()?;
    m.add_function(wrap_pyfunction!(quad_iou, m)?)?;
    m.add_function(wrap_pyfunction!(polygon_area, m)?)?;
    m.add_function(wrap_pyfunction!(min_area_rect, m)?)?;
    m.add_function(wrap_pyfunction!(crop_spec, m)?)?;
    m.add_function(wrap_pyfunction!(nms, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(classify_region, m)?)?;
    m.add_function(wrap_pyfunction!(rank_score, m)?)?;
    m.add_function(wrap_pyfunction!(precision_recall_f, m)?)?;
    m.add_function(wrap_pyfunction!(f_measure, m)?)?;
    m.add_function(wrap_pyfunction!(ap_11point, m)?)?;
    m.add_function(wrap_pyfunction!(mean_ap, m)?)?;
    m.add_function(wrap_pyfunction!(box_stats, m)?)?;
    m.add_function(wrap_pyfunction!(proximity_edges, m)?)?;
    m.add_function(wrap_pyfunction!(parse_gt_line, m)?)?;
    m.add_function(wrap_pyfunction!(parse_detection_line, m)?)?;
    m.add_function(wrap_pyfunction!(load_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(load_class_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(write_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(load_crop_specs, m)?)?;
    Ok(())
}
