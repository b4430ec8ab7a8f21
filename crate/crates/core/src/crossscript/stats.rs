use serde::Serialize;

use super::CrossScriptError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outlier {
    pub label: String,
    pub value: f64,
}

/// Five-number summary plus mean. Whiskers are the most extreme data
/// points within 1.5×IQR of the quartiles; anything beyond is an outlier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<Outlier>,
}

/// Quantile of sorted data by linear interpolation between the closest
/// ranks, at position `(n - 1) * p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

pub fn box_stats<S: AsRef<str>>(values: &[f64], labels: &[S]) -> Result<BoxStats, CrossScriptError> {
    if values.len() != labels.len() {
        return Err(CrossScriptError::LabelMismatch {
            values: values.len(),
            labels: labels.len(),
        });
    }
    if values.is_empty() {
        return Err(CrossScriptError::EmptyInput);
    }
    if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CrossScriptError::NonFinite(v));
    }

    let mut pairs: Vec<(f64, &str)> = values.iter().copied().zip(labels.iter().map(AsRef::as_ref)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();

    // Summing in sorted order makes the mean independent of input order.
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);

    let inside = |v: f64| v >= lo_fence && v <= hi_fence;
    let whisker_low = sorted.iter().copied().find(|&v| inside(v)).unwrap_or(q1);
    let whisker_high = sorted.iter().rev().copied().find(|&v| inside(v)).unwrap_or(q3);
    let outliers = pairs
        .iter()
        .filter(|(v, _)| !inside(*v))
        .map(|(v, l)| Outlier {
            label: l.to_string(),
            value: *v,
        })
        .collect();

    Ok(BoxStats {
        n: sorted.len(),
        mean,
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
    })
}
