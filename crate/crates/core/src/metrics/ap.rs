/// 11-point interpolated average precision.
///
/// `ranked_hits` holds the TP (`true`) / FP (`false`) outcome of each
/// detection of one class, best rank first; detections absorbed by
/// don't-care regions must already be removed. For each recall level
/// `r in {0, 0.1, ..., 1}` the interpolated precision is the best precision
/// at any rank whose recall reaches `r`. Recall comparisons are done in
/// integers (`10 * tp >= level * n_gt`) so level boundaries are exact.
///
/// With `n_gt == 0` the result is 0 if there are detections and
/// `empty_ap` otherwise.
pub fn ap_11point(ranked_hits: &[bool], n_gt: usize, empty_ap: f64) -> f64 {
    if n_gt == 0 {
        return if ranked_hits.is_empty() { empty_ap } else { 0.0 };
    }

    let mut tp_at = Vec::with_capacity(ranked_hits.len());
    let mut envelope = Vec::with_capacity(ranked_hits.len());
    let mut tp = 0usize;
    for (rank, &hit) in ranked_hits.iter().enumerate() {
        tp += usize::from(hit);
        tp_at.push(tp);
        envelope.push(tp as f64 / (rank + 1) as f64);
    }
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }

    let mut sum = 0.0;
    let mut first = 0usize;
    for level in 0..=10usize {
        // Recall is non-decreasing, so the first qualifying rank only moves forward.
        while first < tp_at.len() && 10 * tp_at[first] < level * n_gt {
            first += 1;
        }
        if first < envelope.len() {
            sum += envelope[first];
        }
    }
    sum / 11.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        assert_eq!(ap_11point(&[true, true, true], 3, 1.0), 1.0);
    }

    #[test]
    fn no_true_positives() {
        assert_eq!(ap_11point(&[false, false], 2, 1.0), 0.0);
        assert_eq!(ap_11point(&[], 2, 1.0), 0.0);
    }

    #[test]
    fn tp_fp_tp() {
        // Levels 0..=0.5 reach precision 1, levels 0.6..=1 only 2/3.
        let ap = ap_11point(&[true, false, true], 2, 1.0);
        assert!((ap - 28.0 / 33.0).abs() < 1e-12);
    }

    #[test]
    fn partial_recall() {
        // One of four found at rank 1: recall 0.25 covers levels 0, 0.1, 0.2.
        let ap = ap_11point(&[true, false], 4, 1.0);
        assert!((ap - 3.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn zero_ground_truth() {
        assert_eq!(ap_11point(&[], 0, 1.0), 1.0);
        assert_eq!(ap_11point(&[], 0, 0.0), 0.0);
        assert_eq!(ap_11point(&[false], 0, 1.0), 0.0);
    }
}
