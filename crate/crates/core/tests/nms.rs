mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scriptdet_core::annotation::DetectionRecord;
use scriptdet_core::geometry::{quad_iou, Quad};
use scriptdet_core::nms::{nms, NmsError};

fn det(quad: Quad, confidence: f64, id: &str) -> DetectionRecord {
    DetectionRecord {
        image_id: "img".into(),
        quad,
        confidence,
        region_id: Some(id.into()),
    }
}

fn random_set(seed: u64) -> Vec<DetectionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=10);
    (0..n)
        .map(|i| {
            let center = (rng.gen_range(0.0..30.0), rng.gen_range(0.0..30.0));
            let q = common::random_convex_quad(&mut rng, center, 10.0);
            det(q, rng.gen_range(0..=10) as f64 / 10.0, &format!("r{i}"))
        })
        .collect()
}

#[test]
fn chain_keeps_ends() {
    let a = Quad::rect(0.0, 0.0, 10.0, 10.0).unwrap();
    let b = Quad::rect(2.5, 0.0, 12.5, 10.0).unwrap();
    let c = Quad::rect(5.0, 0.0, 15.0, 10.0).unwrap();
    assert!((quad_iou(&a, &b) - 0.6).abs() < 1e-12);
    assert!((quad_iou(&b, &c) - 0.6).abs() < 1e-12);
    assert!((quad_iou(&a, &c) - 1.0 / 3.0).abs() < 1e-12);
    let dets = vec![det(a, 0.9, "a"), det(b, 0.8, "b"), det(c, 0.7, "c")];
    let kept = nms(&dets, 0.5, 0.0).unwrap();
    let ids: Vec<_> = kept.iter().map(|d| d.region_id.as_deref().unwrap()).collect();
    assert_eq!(ids, ["a", "c"]);
    let oracle = common::nms_fixed_point(&dets, 0.5, 0.0, quad_iou);
    assert_eq!(oracle, [0, 2]);
}

#[test]
fn identical_quads() {
    let q = Quad::rect(0.0, 0.0, 4.0, 4.0).unwrap();
    let kept = nms(&[det(q, 0.8, "low"), det(q, 0.9, "high")], 0.5, 0.0).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].region_id.as_deref(), Some("high"));
}

#[test]
fn rejects_bad_threshold() {
    assert!(matches!(nms(&[], 1.2, 0.5), Err(NmsError::InvalidThreshold(_))));
    assert!(matches!(nms(&[], 0.5, -0.1), Err(NmsError::InvalidThreshold(_))));
}

proptest! {
    #[test]
    fn greedy_properties(seed in any::<u64>(), iou in 0.0f64..=1.0, score in 0.0f64..=1.0) {
        let dets = random_set(seed);
        let kept = nms(&dets, iou, score).unwrap();
        prop_assert_eq!(&nms(&kept, iou, score).unwrap(), &kept);
        for (i, a) in kept.iter().enumerate() {
            prop_assert!(a.confidence >= score);
            prop_assert!(dets.contains(a));
            for b in &kept[i + 1..] {
                prop_assert!(quad_iou(&a.quad, &b.quad) <= iou);
                prop_assert!(a.confidence >= b.confidence);
            }
        }
        let expected: Vec<_> = common::nms_fixed_point(&dets, iou, score, quad_iou)
            .into_iter()
            .map(|i| dets[i].clone())
            .collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn monotone_in_score(seed in any::<u64>(), iou in 0.0f64..=1.0, s1 in 0.0f64..=1.0, s2 in 0.0f64..=1.0) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let dets = random_set(seed);
        let low = nms(&dets, iou, lo).unwrap();
        let high = nms(&dets, iou, hi).unwrap();
        // Raising the threshold only trims the tail of the lower-threshold result.
        let trimmed: Vec<_> = low.into_iter().filter(|d| d.confidence >= hi).collect();
        prop_assert_eq!(&high, &trimmed);
        prop_assert!(high.iter().all(|d| d.confidence >= hi));
    }
}
