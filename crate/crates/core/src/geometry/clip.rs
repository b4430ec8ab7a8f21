//! Sutherland-Hodgman clipping of convex polygons.

use super::{orient, polygon_area, Point2};

/// Clips `subject` to the half-plane left of `a -> b` (the interior side
/// of a positively oriented polygon).
fn clip_halfplane(subject: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let n = subject.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let s = subject[i];
        let e = subject[(i + 1) % n];
        let ds = orient(a, b, s);
        let de = orient(a, b, e);
        let s_in = ds >= 0.0;
        let e_in = de >= 0.0;
        if s_in != e_in {
            let t = ds / (ds - de);
            out.push(Point2::new(s.x + (e.x - s.x) * t, s.y + (e.y - s.y) * t));
        }
        if e_in {
            out.push(e);
        }
    }
    out
}

/// Intersection of two convex, positively oriented polygons.
///
/// Returns an empty vector when the intersection has no interior.
pub fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let mut result = subject.to_vec();
    for i in 0..clip.len() {
        result = clip_halfplane(&result, clip[i], clip[(i + 1) % clip.len()]);
        if result.len() < 3 {
            return Vec::new();
        }
    }
    result
}

pub fn intersection_area(a: &[Point2], b: &[Point2]) -> f64 {
    polygon_area(&clip_convex(a, b))
}
