//! Script assignment by nearest semantic embedding.
//!
//! Region vectors arrive already projected into the word-embedding space of
//! the class table; the decision is the allowed class with the highest
//! cosine similarity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{DetectionSet, ScriptClass};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("zero-norm embedding")]
    ZeroNormVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("allowed class set is empty")]
    EmptyAllowedSet,
    #[error("class {0} not in embedding table")]
    UnknownClass(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Returns `None` if any component is not finite.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values.iter().all(|v| v.is_finite()).then_some(Self(values))
    }

    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values).expect("finite embedding values")
    }
}

/// Per-script anchor vectors sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEmbeddingTable {
    dim: usize,
    entries: BTreeMap<ScriptClass, EmbeddingVector>,
}

impl ClassEmbeddingTable {
    pub fn new(entries: BTreeMap<ScriptClass, EmbeddingVector>) -> Result<Self, ClassifyError> {
        let dim = entries.values().next().map_or(0, EmbeddingVector::dim);
        if let Some(v) = entries.values().find(|v| v.dim() != dim) {
            return Err(ClassifyError::DimensionMismatch(dim, v.dim()));
        }
        Ok(Self { dim, entries })
    }

    pub(crate) fn from_parts(dim: usize, entries: BTreeMap<ScriptClass, EmbeddingVector>) -> Self {
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, class: &ScriptClass) -> Option<&EmbeddingVector> {
        self.entries.get(class)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ScriptClass> {
        self.entries.keys()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.scaled(factor)))
                .collect(),
        }
    }
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, ClassifyError> {
    if a.dim() != b.dim() {
        return Err(ClassifyError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(ClassifyError::ZeroNormVector);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Winning class and its cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecision {
    pub script: ScriptClass,
    pub similarity: f64,
}

/// Argmax of cosine similarity over `allowed`. Exact ties go to the
/// lexicographically smallest class name.
pub fn classify_region(
    v: &EmbeddingVector,
    table: &ClassEmbeddingTable,
    allowed: &BTreeSet<ScriptClass>,
) -> Result<ClassDecision, ClassifyError> {
    if allowed.is_empty() {
        return Err(ClassifyError::EmptyAllowedSet);
    }
    let mut best: Option<ClassDecision> = None;
    // BTreeSet iterates in lexicographic order, so `>` keeps the first of a tie.
    for class in allowed {
        let anchor = table
            .get(class)
            .ok_or_else(|| ClassifyError::UnknownClass(class.to_string()))?;
        let sim = cosine_similarity(v, anchor)?;
        if best.as_ref().is_none_or(|b| sim > b.similarity) {
            best = Some(ClassDecision {
                script: class.clone(),
                similarity: sim,
            });
        }
    }
    Ok(best.expect("allowed set is non-empty"))
}

/// The score that orders detections for average precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    #[default]
    Detector,
    Similarity,
    Product,
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMode::Detector => "detector",
            ScoreMode::Similarity => "similarity",
            ScoreMode::Product => "product",
        })
    }
}

impl FromStr for ScoreMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "detector" => Ok(ScoreMode::Detector),
            "similarity" => Ok(ScoreMode::Similarity),
            "product" => Ok(ScoreMode::Product),
            other => Err(format!("unknown score mode {other:?}")),
        }
    }
}

pub fn rank_score(det_confidence: f64, similarity: f64, mode: ScoreMode) -> f64 {
    let sim01 = (1.0 + similarity) / 2.0;
    match mode {
        ScoreMode::Detector => det_confidence,
        ScoreMode::Similarity => sim01,
        ScoreMode::Product => det_confidence * sim01,
    }
}

/// A classified detection region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptAssignment {
    pub image_id: String,
    pub region_id: String,
    pub script: ScriptClass,
    pub similarity: f64,
    pub rank_score: f64,
}

/// Assignments keyed by `(image_id, region_id)`.
pub type Assignments = BTreeMap<(String, String), ScriptAssignment>;

#[derive(Debug, Default)]
pub struct AssignmentRun {
    pub assignments: Assignments,
    /// Detections lacking a region id or an embedding, as `(image_id, region_id)`.
    pub unresolved: Vec<(String, Option<String>)>,
}

/// Classifies every detection that has an embedding, restricted to `allowed`.
pub fn assign_detections(
    detections: &DetectionSet,
    embeddings: &BTreeMap<String, EmbeddingVector>,
    table: &ClassEmbeddingTable,
    allowed: &BTreeSet<ScriptClass>,
    mode: ScoreMode,
) -> Result<AssignmentRun, ClassifyError> {
    let mut run = AssignmentRun::default();
    for det in detections.values().flatten() {
        let Some(v) = det.region_id.as_ref().and_then(|r| embeddings.get(r)) else {
            run.unresolved.push((det.image_id.clone(), det.region_id.clone()));
            continue;
        };
        let region_id = det.region_id.clone().unwrap_or_default();
        let decision = classify_region(v, table, allowed)?;
        run.assignments.insert(
            (det.image_id.clone(), region_id.clone()),
            ScriptAssignment {
                image_id: det.image_id.clone(),
                region_id,
                script: decision.script,
                similarity: decision.similarity,
                rank_score: rank_score(det.confidence, decision.similarity, mode),
            },
        );
    }
    Ok(run)
}
