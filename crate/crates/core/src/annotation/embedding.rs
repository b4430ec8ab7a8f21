//! Embedding text files: a `dim <D>` header, then `key v1 ... vD` rows.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{strip_bom, ClassSplit, ParseError, ScriptClass};
use crate::classifier::{ClassEmbeddingTable, EmbeddingVector};

const SOURCE: &str = "embeddings";

fn io_err(source: std::io::Error) -> ParseError {
    ParseError::Io {
        path: SOURCE.into(),
        source,
    }
}

/// Iterates `(line_no, key, values)` rows after validating the header.
fn read_rows(
    reader: impl BufRead,
    mut row: impl FnMut(usize, &str, Vec<f64>) -> Result<(), ParseError>,
) -> Result<usize, ParseError> {
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line_no = idx + 1;
        let line = if idx == 0 { strip_bom(&line) } else { &line };
        let mut tokens = line.split_whitespace();
        let Some(key) = tokens.next() else {
            continue;
        };

        let Some(d) = dim else {
            let parsed = match (key, tokens.next(), tokens.next()) {
                ("dim", Some(n), None) => n.parse::<usize>().ok().filter(|&n| n > 0),
                _ => None,
            };
            dim = Some(parsed.ok_or_else(|| ParseError::MalformedHeader(line.to_string()).at(SOURCE, line_no))?);
            continue;
        };

        let mut values = Vec::with_capacity(d);
        for tok in tokens {
            let v: f64 = tok
                .parse()
                .map_err(|_| ParseError::MalformedLine(format!("non-numeric value {tok:?}")).at(SOURCE, line_no))?;
            if !v.is_finite() {
                return Err(ParseError::NonFiniteValue(key.to_string()).at(SOURCE, line_no));
            }
            values.push(v);
        }
        if values.len() != d {
            return Err(ParseError::DimensionMismatch {
                expected: d,
                found: values.len(),
            }
            .at(SOURCE, line_no));
        }
        row(line_no, key, values)?;
    }
    dim.ok_or_else(|| ParseError::MalformedHeader(String::new()))
}

/// Region embeddings keyed by region id.
pub fn load_embeddings(reader: impl BufRead) -> Result<BTreeMap<String, EmbeddingVector>, ParseError> {
    let mut out = BTreeMap::new();
    read_rows(reader, |line_no, key, values| {
        if out.contains_key(key) {
            return Err(ParseError::DuplicateRegionId(key.to_string()).at(SOURCE, line_no));
        }
        out.insert(key.to_string(), EmbeddingVector::from_finite(values));
        Ok(())
    })?;
    Ok(out)
}

/// Per-script semantic embeddings. Every class of `split` must be present;
/// extra rows are kept.
pub fn load_class_embeddings(reader: impl BufRead, split: &ClassSplit) -> Result<ClassEmbeddingTable, ParseError> {
    let mut entries = BTreeMap::new();
    let dim = read_rows(reader, |line_no, key, values| {
        let class = ScriptClass::new(key)?;
        if entries.contains_key(&class) {
            return Err(ParseError::DuplicateClass(class.to_string()).at(SOURCE, line_no));
        }
        entries.insert(class, EmbeddingVector::from_finite(values));
        Ok(())
    })?;
    if let Some(missing) = split.classes().find(|c| !entries.contains_key(*c)) {
        return Err(ParseError::MissingClass(missing.to_string()));
    }
    Ok(ClassEmbeddingTable::from_parts(dim, entries))
}

pub fn write_embeddings<'a, K: AsRef<str> + 'a>(
    mut writer: impl Write,
    dim: usize,
    rows: impl IntoIterator<Item = (K, &'a EmbeddingVector)>,
) -> std::io::Result<()> {
    writeln!(writer, "dim {dim}")?;
    for (key, v) in rows {
        write!(writer, "{}", key.as_ref())?;
        for x in v.values() {
            write!(writer, " {x}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
