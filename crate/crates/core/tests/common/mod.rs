//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use scriptdet_core::annotation::DetectionRecord;
use scriptdet_core::geometry::{Point2, Quad, QuadMode};

/// Convex quad: four sorted random angles on a circle, stretched and rotated.
pub fn random_convex_quad<R: Rng>(rng: &mut R, center: (f64, f64), radius: f64) -> Quad {
    loop {
        let mut angles: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        let (sx, sy) = (rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0));
        let rot = rng.gen_range(0.0..PI);
        let (c, s) = (rot.cos(), rot.sin());
        let pts: [Point2; 4] = std::array::from_fn(|i| {
            let (x, y) = (radius * sx * angles[i].cos(), radius * sy * angles[i].sin());
            Point2::new(center.0 + c * x - s * y, center.1 + s * x + c * y)
        });
        if let Ok(q) = Quad::new(pts, QuadMode::Strict) {
            if q.area() > 0.05 * radius * radius {
                return q;
            }
        }
    }
}

/// Any simple quad, convex or not: a random convex quad with one vertex
/// possibly pulled towards the centroid.
pub fn random_simple_quad<R: Rng>(rng: &mut R, center: (f64, f64), radius: f64) -> Quad {
    loop {
        let q = random_convex_quad(rng, center, radius);
        if rng.gen_bool(0.5) {
            return q;
        }
        let mut v = *q.vertices();
        let k = rng.gen_range(0..4);
        let cx = v.iter().map(|p| p.x).sum::<f64>() / 4.0;
        let cy = v.iter().map(|p| p.y).sum::<f64>() / 4.0;
        let t = rng.gen_range(0.3..1.5);
        v[k] = Point2::new(v[k].x + t * (cx - v[k].x), v[k].y + t * (cy - v[k].y));
        if let Ok(q) = Quad::new(v, QuadMode::Strict) {
            return q;
        }
    }
}

/// Point in convex polygon given in either orientation (boundary counts).
pub fn in_convex(poly: &[Point2], p: Point2) -> bool {
    let mut pos = false;
    let mut neg = false;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let cr = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        pos |= cr > 0.0;
        neg |= cr < 0.0;
    }
    !(pos && neg)
}

/// IoU of two convex quads by uniform sampling of their joint bounding box.
pub fn monte_carlo_iou<R: Rng>(a: &Quad, b: &Quad, samples: usize, rng: &mut R) -> f64 {
    let pts: Vec<Point2> = a.vertices().iter().chain(b.vertices()).copied().collect();
    let (x0, x1) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
    let (y0, y1) = pts
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let (mut both, mut either) = (0usize, 0usize);
    for _ in 0..samples {
        let p = Point2::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        let (ia, ib) = (in_convex(a.vertices(), p), in_convex(b.vertices(), p));
        both += usize::from(ia && ib);
        either += usize::from(ia || ib);
    }
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

/// Area of the bounding rectangle of `pts` aligned with direction `theta`.
pub fn rect_area_at(pts: &[Point2], theta: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    let (mut u0, mut u1, mut v0, mut v1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        let u = p.x * c + p.y * s;
        let v = -p.x * s + p.y * c;
        u0 = u0.min(u);
        u1 = u1.max(u);
        v0 = v0.min(v);
        v1 = v1.max(v);
    }
    (u1 - u0) * (v1 - v0)
}

/// Minimum over `steps` equally spaced directions in [0, pi).
pub fn sweep_min_area(pts: &[Point2], steps: usize) -> (f64, usize) {
    (0..steps)
        .map(|k| (rect_area_at(pts, PI * k as f64 / steps as f64), k))
        .fold((f64::MAX, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// The sweep minimum refined by golden-section search within one step of
/// each of the best few sweep directions.
pub fn refined_min_area(pts: &[Point2], steps: usize) -> f64 {
    let step = PI / steps as f64;
    let mut cands: Vec<(f64, usize)> = (0..steps).map(|k| (rect_area_at(pts, step * k as f64), k)).collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    cands
        .iter()
        .take(4)
        .map(|&(area, k)| {
            let (mut lo, mut hi) = (step * k as f64 - step, step * k as f64 + step);
            for _ in 0..200 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if rect_area_at(pts, m1) <= rect_area_at(pts, m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            area.min(rect_area_at(pts, (lo + hi) / 2.0))
        })
        .fold(f64::MAX, f64::min)
}

/// 11-point AP straight from the definition: for each recall level, the
/// best precision over every prefix of the ranking whose recall reaches it.
pub fn prefix_ap(hits: &[bool], n_gt: usize) -> f64 {
    let mut sum = 0.0;
    for level in 0..=10usize {
        let mut best: Option<f64> = None;
        for k in 1..=hits.len() {
            let tp = hits[..k].iter().filter(|h| **h).count();
            // recall tp / n_gt >= level / 10, compared exactly
            if tp * 10 >= level * n_gt {
                let p = tp as f64 / k as f64;
                best = Some(best.map_or(p, |b: f64| b.max(p)));
            }
        }
        sum += best.unwrap_or(0.0);
    }
    sum / 11.0
}

/// NMS result characterized without a greedy loop: the unique subset `K` of
/// the score-passing detections where each one is in `K` exactly when no
/// higher-ranked member of `K` overlaps it above `iou_thresh`. Found by
/// trying every subset. Returns indices into `dets`.
pub fn nms_fixed_point(
    dets: &[DetectionRecord],
    iou_thresh: f64,
    score_thresh: f64,
    iou: impl Fn(&Quad, &Quad) -> f64,
) -> Vec<usize> {
    let mut ranked: Vec<usize> = (0..dets.len())
        .filter(|&i| dets[i].confidence >= score_thresh)
        .collect();
    ranked.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    let n = ranked.len();
    assert!(n <= 16, "too many detections for subset enumeration");

    let mut found: Vec<Vec<usize>> = Vec::new();
    for mask in 0u32..(1 << n) {
        let member = |r: usize| mask & (1 << r) != 0;
        let consistent = (0..n).all(|r| {
            let blocked = (0..r).any(|q| member(q) && iou(&dets[ranked[q]].quad, &dets[ranked[r]].quad) > iou_thresh);
            member(r) == !blocked
        });
        if consistent {
            found.push((0..n).filter(|&r| member(r)).map(|r| ranked[r]).collect());
        }
    }
    assert_eq!(found.len(), 1, "fixed point must be unique");
    found.pop().unwrap()
}
