//! Cross-script transfer analysis over a train-script × test-script
//! f-measure matrix: proximity edges at a threshold and box-plot summaries of
//! the off-diagonal rows and columns.

mod stats;
mod svg;

use std::collections::BTreeSet;
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

pub use stats::{box_stats, quantile, BoxStats, Outlier};
pub use svg::{box_plot_svg, proximity_svg};

pub const DEFAULT_CLOSE_THRESHOLD: f64 = 0.6;
pub const DEFAULT_LOOSE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error)]
pub enum CrossScriptError {
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("no values to summarize")]
    EmptyInput,
    #[error("{values} values but {labels} labels")]
    LabelMismatch { values: usize, labels: usize },
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Square matrix of f-measures; entry `(i, j)` is the score of a detector
/// trained on script `i` and tested on script `j`. Entries may be missing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FMeasureMatrix {
    scripts: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl FMeasureMatrix {
    pub fn new(scripts: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self, CrossScriptError> {
        let n = scripts.len();
        if n == 0 {
            return Err(CrossScriptError::MalformedMatrix("no scripts".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &scripts {
            if s.is_empty() || !seen.insert(s.as_str()) {
                return Err(CrossScriptError::MalformedMatrix(format!(
                    "bad or repeated script name {s:?}"
                )));
            }
        }
        if values.len() != n || values.iter().any(|row| row.len() != n) {
            return Err(CrossScriptError::MalformedMatrix(format!("expected {n}x{n} values")));
        }
        for v in values.iter().flatten().flatten() {
            if !(0.0..=1.0).contains(v) {
                return Err(CrossScriptError::MalformedMatrix(format!("value {v} outside [0, 1]")));
            }
        }
        Ok(Self { scripts, values })
    }

    /// Reads a CSV whose header row and first column both list the script
    /// names in the same order. Empty cells and `NA` mark missing entries.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, CrossScriptError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let scripts: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();

        let mut values = Vec::with_capacity(scripts.len());
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let name = record.get(0).unwrap_or_default();
            if scripts.get(i).map(String::as_str) != Some(name) {
                return Err(CrossScriptError::MalformedMatrix(format!(
                    "row {} is labeled {name:?}, expected {:?}",
                    i + 1,
                    scripts.get(i)
                )));
            }
            if record.len() != scripts.len() + 1 {
                return Err(CrossScriptError::MalformedMatrix(format!(
                    "row {name:?} has {} cells, expected {}",
                    record.len() - 1,
                    scripts.len()
                )));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|cell| match cell {
                    "" | "NA" | "na" => Ok(None),
                    s => s.parse::<f64>().map(Some).map_err(|_| {
                        CrossScriptError::MalformedMatrix(format!("cell {s:?} in row {name:?} is not a number"))
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        Self::new(scripts, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("script");
        for s in &self.scripts {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (s, row) in self.scripts.iter().zip(&self.values) {
            out.push_str(s);
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn scripts(&self) -> &[String] {
        &self.scripts
    }

    pub fn len(&self) -> usize {
        self.scripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scripts.is_empty()
    }

    pub fn get(&self, train: usize, test: usize) -> Option<f64> {
        self.values[train][test]
    }

    pub fn index_of(&self, script: &str) -> Option<usize> {
        self.scripts.iter().position(|s| s == script)
    }

    pub fn transpose(&self) -> Self {
        let n = self.len();
        Self {
            scripts: self.scripts.clone(),
            values: (0..n).map(|i| (0..n).map(|j| self.values[j][i]).collect()).collect(),
        }
    }

    /// Relabels the matrix so that new index `k` is old index `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            scripts: order.iter().map(|&i| self.scripts[i].clone()).collect(),
            values: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.values[i][j]).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub script: String,
    pub f_measure: f64,
}

/// Scripts close to `script`, highest f-measure first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proximity {
    pub script: String,
    pub close: Vec<Edge>,
}

/// For every training script `s`, the test scripts `t != s` with
/// `m[s][t] >= threshold`. Missing entries never form edges.
pub fn proximity_edges(m: &FMeasureMatrix, threshold: f64) -> Result<Vec<Proximity>, CrossScriptError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CrossScriptError::InvalidThreshold(threshold));
    }
    Ok(m.scripts
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut close: Vec<Edge> = m
                .scripts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .filter_map(|(j, t)| {
                    m.get(i, j).filter(|&f| f >= threshold).map(|f| Edge {
                        script: t.clone(),
                        f_measure: f,
                    })
                })
                .collect();
            close.sort_by(|a, b| b.f_measure.total_cmp(&a.f_measure));
            Proximity {
                script: s.clone(),
                close,
            }
        })
        .collect())
}

/// Off-diagonal values of one row or column, labeled by the other script.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptValues {
    pub script: String,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

fn off_diagonal(m: &FMeasureMatrix, pick: impl Fn(usize, usize) -> Option<f64>) -> Vec<ScriptValues> {
    m.scripts
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (labels, values) = m
                .scripts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .filter_map(|(j, t)| pick(i, j).map(|v| (t.clone(), v)))
                .unzip();
            ScriptValues {
                script: s.clone(),
                labels,
                values,
            }
        })
        .collect()
}

/// Row `i` without its diagonal: one detector tested on every other script.
pub fn one_train_test_rest(m: &FMeasureMatrix) -> Vec<ScriptValues> {
    off_diagonal(m, |i, j| m.get(i, j))
}

/// Column `j` without its diagonal: every other detector tested on one script.
pub fn one_test_train_rest(m: &FMeasureMatrix) -> Vec<ScriptValues> {
    off_diagonal(m, |j, i| m.get(i, j))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptBox {
    pub script: String,
    pub stats: BoxStats,
}

/// Box statistics for each entry; scripts with no values are skipped.
pub fn box_stats_all(groups: &[ScriptValues]) -> Result<Vec<ScriptBox>, CrossScriptError> {
    groups
        .iter()
        .filter(|g| !g.values.is_empty())
        .map(|g| {
            Ok(ScriptBox {
                script: g.script.clone(),
                stats: box_stats(&g.values, &g.labels)?,
            })
        })
        .collect()
}
