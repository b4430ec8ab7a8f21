mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scriptdet_core::annotation::ImageMeta;
use scriptdet_core::geometry::{crop_spec_for_quad, min_area_rect, quad_iou, GeometryError, Point2, Quad, QuadMode};

fn quad_from_seed(seed: u64, convex: bool) -> Quad {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if convex {
        common::random_convex_quad(&mut rng, (50.0, 50.0), 30.0)
    } else {
        common::random_simple_quad(&mut rng, (50.0, 50.0), 30.0)
    }
}

fn transform(q: &Quad, angle: f64, scale: f64, shift: (f64, f64)) -> Quad {
    let (c, s) = (angle.cos(), angle.sin());
    q.map_points(|p| {
        Point2::new(
            scale * (c * p.x - s * p.y) + shift.0,
            scale * (s * p.x + c * p.y) + shift.1,
        )
    })
    .unwrap()
}

/// Sutherland–Hodgman against an axis-aligned box, written out for the test.
fn clip_to_box(poly: &[Point2], w: f64, h: f64) -> Vec<Point2> {
    let planes: [(f64, f64, f64); 4] = [(1.0, 0.0, 0.0), (-1.0, 0.0, -w), (0.0, 1.0, 0.0), (0.0, -1.0, -h)];
    let mut out = poly.to_vec();
    for (a, b, c) in planes {
        let inside = |p: &Point2| a * p.x + b * p.y >= c;
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let (p, q) = (input[i], input[(i + 1) % input.len()]);
            if inside(&p) {
                out.push(p);
            }
            if inside(&p) != inside(&q) {
                let (fp, fq) = (a * p.x + b * p.y - c, a * q.x + b * q.y - c);
                let t = fp / (fp - fq);
                out.push(Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
    }
    out
}

#[test]
fn iou_one_seventh_against_sampling() {
    let a = Quad::rect(0.0, 0.0, 1.0, 1.0).unwrap();
    let b = Quad::rect(0.5, 0.5, 1.5, 1.5).unwrap();
    let iou = quad_iou(&a, &b);
    assert!((iou - 1.0 / 7.0).abs() < 1e-12);
    let mc = common::monte_carlo_iou(&a, &b, 1_000_000, &mut ChaCha8Rng::seed_from_u64(7));
    assert!((iou - mc).abs() < 1e-3, "{iou} vs {mc}");
}

#[test]
fn diamond_matches_sweep() {
    let q = Quad::from_coords([1.0, 0.0, 2.0, 1.0, 1.0, 2.0, 0.0, 1.0], QuadMode::Strict).unwrap();
    let r = min_area_rect(&q);
    let (sweep, k) = common::sweep_min_area(q.vertices(), 1800);
    assert!((r.area() - 2.0).abs() < 1e-12);
    assert!((sweep - 2.0).abs() < 1e-12);
    // The sweep's minimizing direction is a multiple of pi/4 as well.
    assert_eq!(k % 450, 0);
    assert!((r.width - 2f64.sqrt()).abs() < 1e-12 && (r.height - 2f64.sqrt()).abs() < 1e-12);
    assert!((r.angle - PI / 4.0).abs() < 1e-12);
}

#[test]
fn crop_partially_outside_matches_clip() {
    let image = ImageMeta::new("img", 100, 100).unwrap();
    let mut outside = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = common::random_convex_quad(&mut rng, (95.0, 20.0 + seed as f64), 25.0);
        let full = min_area_rect(&q);
        let clipped = clip_to_box(&full.corners(), 100.0, 100.0);
        if clipped.len() < 3 {
            // A random quad need not contain its nominal center.
            assert!(matches!(
                crop_spec_for_quad(&q, &image, 0.0),
                Err(GeometryError::QuadOutsideImage { .. })
            ));
            continue;
        }
        let crop = crop_spec_for_quad(&q, &image, 0.0).unwrap();
        let inside = full
            .corners()
            .iter()
            .all(|p| (0.0..=100.0).contains(&p.x) && (0.0..=100.0).contains(&p.y));
        if inside {
            assert!(!crop.clamped && crop.spec == full, "seed {seed}");
            continue;
        }
        outside += 1;
        assert!(crop.clamped, "seed {seed}");
        assert!(crop.spec.area() <= full.area() * (1.0 + 1e-12));
        for p in &clipped {
            assert!(crop.spec.contains(*p, 1e-7), "seed {seed}: {p:?}");
        }
        // Tight: each side of the crop touches the clipped polygon.
        let (u, n) = crop.spec.axes();
        for axis in [u, n] {
            let proj: Vec<f64> = clipped.iter().map(|p| (*p - crop.spec.center).dot(axis)).collect();
            let half = if axis == u { crop.spec.width } else { crop.spec.height } / 2.0;
            let lo = proj.iter().copied().fold(f64::MAX, f64::min);
            let hi = proj.iter().copied().fold(f64::MIN, f64::max);
            assert!((lo + half).abs() < 1e-7 && (hi - half).abs() < 1e-7, "seed {seed}");
        }
    }
    assert!(outside >= 25, "only {outside} crops reached the border");
}

#[test]
fn crop_outside_image() {
    let image = ImageMeta::new("img", 100, 100).unwrap();
    let q = Quad::rect(-50.0, -40.0, -10.0, -5.0).unwrap();
    assert!(matches!(
        crop_spec_for_quad(&q, &image, 0.0),
        Err(GeometryError::QuadOutsideImage { .. })
    ));
    let inside = Quad::rect(10.0, 10.0, 40.0, 30.0).unwrap();
    let crop = crop_spec_for_quad(&inside, &image, 0.0).unwrap();
    assert_eq!(crop.spec, min_area_rect(&inside));
    assert!(!crop.clamped);
}

proptest! {
    #[test]
    fn iou_symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>(), convex in any::<bool>()) {
        let a = quad_from_seed(s1, convex);
        let b = quad_from_seed(s2, convex);
        let ab = quad_iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - quad_iou(&b, &a)).abs() <= 1e-12);
        prop_assert!((quad_iou(&a, &a) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn iou_similarity_invariant(
        s1 in any::<u64>(), s2 in any::<u64>(),
        angle in 0.0..(2.0 * PI), scale in 0.1f64..10.0,
        dx in -500.0f64..500.0, dy in -500.0f64..500.0,
    ) {
        let a = quad_from_seed(s1, true);
        let b = quad_from_seed(s2, true);
        let moved = quad_iou(&transform(&a, angle, scale, (dx, dy)), &transform(&b, angle, scale, (dx, dy)));
        prop_assert!((quad_iou(&a, &b) - moved).abs() <= 1e-9);
    }

    #[test]
    fn min_rect_bounds(seed in any::<u64>(), convex in any::<bool>()) {
        let q = quad_from_seed(seed, convex);
        let r = min_area_rect(&q);
        let v = q.vertices();
        let (x0, x1) = v.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
        let (y0, y1) = v.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
        let aabb = (x1 - x0) * (y1 - y0);
        prop_assert!(r.area() <= aabb * (1.0 + 1e-12));
        if r.angle == 0.0 {
            prop_assert!((r.area() - aabb).abs() <= 1e-9 * aabb);
        }
        prop_assert!(r.area() >= q.area() * (1.0 - 1e-12));
        prop_assert!(r.width >= r.height && r.height > 0.0);
        prop_assert!((0.0..PI).contains(&r.angle));
        for p in v {
            prop_assert!(r.contains(*p, 1e-9 * (r.width + r.height)));
        }
    }

    #[test]
    fn normalization_is_canonical(seed in any::<u64>(), shift in 0usize..4, reverse in any::<bool>()) {
        let q = quad_from_seed(seed, false);
        let mut v = *q.vertices();
        v.rotate_left(shift);
        if reverse {
            v.reverse();
        }
        prop_assert_eq!(Quad::new(v, QuadMode::Strict).unwrap(), q);
    }
}
