//! Quadrilateral and rotated-rectangle geometry.
//!
//! Coordinates are image pixels with `y` growing downward. A polygon is
//! "positively oriented" when its shoelace sum is positive, which in image
//! coordinates is a clockwise walk (right, then down).

mod clip;
mod rect;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clip::{clip_convex, intersection_area};
pub use rect::{crop_spec_for_quad, min_area_rect, min_area_rect_points, CropSpec, ImageCrop};

/// Areas below this many square pixels are treated as zero.
pub const DEGENERATE_AREA: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("degenerate quad: {0}")]
    DegenerateQuad(DegenerateReason),
    #[error("quad does not overlap the {width}x{height} image")]
    QuadOutsideImage { width: u32, height: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateReason {
    ZeroArea,
    SelfIntersecting,
}

impl fmt::Display for DegenerateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegenerateReason::ZeroArea => f.write_str("zero area"),
            DegenerateReason::SelfIntersecting => f.write_str("self-intersecting"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    fn lex_cmp(&self, other: &Point2) -> Ordering {
        self.x.total_cmp(&other.x).then_with(|| self.y.total_cmp(&other.y))
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;

    fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }
}

/// Signed turn of `c` relative to the directed line `a -> b`.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// How strictly raw vertex lists are turned into a [`Quad`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadMode {
    /// Only orientation is repaired; crossing edges are rejected.
    #[default]
    Strict,
    /// Crossing vertex lists are re-sorted by angle about the centroid.
    Lenient,
}

/// A simple, positively oriented quadrilateral with canonical start vertex.
///
/// The first vertex minimizes `x + y` (ties: smaller `y`), vertices then
/// proceed clockwise in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quad {
    vertices: [Point2; 4],
}

impl Quad {
    pub fn new(raw: [Point2; 4], mode: QuadMode) -> Result<Self, GeometryError> {
        if raw.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }

        let mut pts = raw;
        if !is_simple_quad(&pts) {
            match mode {
                QuadMode::Strict => return Err(GeometryError::DegenerateQuad(DegenerateReason::SelfIntersecting)),
                QuadMode::Lenient => sort_by_angle(&mut pts),
            }
        }

        let signed = signed_area(&pts);
        if signed.abs() < DEGENERATE_AREA {
            return Err(GeometryError::DegenerateQuad(DegenerateReason::ZeroArea));
        }
        if signed < 0.0 {
            pts.reverse();
        }

        let start = (0..4)
            .min_by(|&i, &j| {
                let (a, b) = (pts[i], pts[j]);
                (a.x + a.y).total_cmp(&(b.x + b.y)).then_with(|| a.y.total_cmp(&b.y))
            })
            .unwrap_or(0);
        pts.rotate_left(start);

        Ok(Self { vertices: pts })
    }

    /// Builds a quad from `x1, y1, ..., x4, y4`.
    pub fn from_coords(coords: [f64; 8], mode: QuadMode) -> Result<Self, GeometryError> {
        let p = |i: usize| Point2::new(coords[2 * i], coords[2 * i + 1]);
        Self::new([p(0), p(1), p(2), p(3)], mode)
    }

    /// Axis-aligned rectangle spanning `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::from_coords([x0, y0, x1, y0, x1, y1, x0, y1], QuadMode::Strict)
    }

    pub fn vertices(&self) -> &[Point2; 4] {
        &self.vertices
    }

    pub fn coords(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, p) in self.vertices.iter().enumerate() {
            out[2 * i] = p.x;
            out[2 * i + 1] = p.y;
        }
        out
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn is_convex(&self) -> bool {
        (0..4).all(|i| orient(self.vertices[i], self.vertices[(i + 1) % 4], self.vertices[(i + 2) % 4]) >= 0.0)
    }

    /// The polygon used for clipping: the quad itself, or its hull when it is
    /// not convex. The flag reports whether the hull was substituted.
    pub fn convex_polygon(&self) -> (Vec<Point2>, bool) {
        if self.is_convex() {
            (self.vertices.to_vec(), false)
        } else {
            (convex_hull(&self.vertices), true)
        }
    }

    /// Applies `f` to each vertex and re-normalizes.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Result<Self, GeometryError> {
        let v = self.vertices;
        Self::new([f(v[0]), f(v[1]), f(v[2]), f(v[3])], QuadMode::Strict)
    }
}

/// Shoelace sum / 2, positive for clockwise (image coordinates) polygons.
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum();
    twice / 2.0
}

pub fn polygon_area(poly: &[Point2]) -> f64 {
    signed_area(poly).abs()
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn is_simple_quad(p: &[Point2; 4]) -> bool {
    !segments_cross(p[0], p[1], p[2], p[3]) && !segments_cross(p[1], p[2], p[3], p[0])
}

fn sort_by_angle(pts: &mut [Point2; 4]) {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    pts.sort_by(|a, b| {
        let ta = (a.y - cy).atan2(a.x - cx);
        let tb = (b.y - cy).atan2(b.x - cx);
        ta.total_cmp(&tb)
    });
}

/// Andrew's monotone chain. Output is positively oriented, without
/// collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(Point2::lex_cmp);
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }

    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Intersection-over-union with a flag telling whether a convex-hull
/// substitute was used for either input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IouOutcome {
    pub iou: f64,
    pub hull_fallback: bool,
}

pub fn quad_iou_detailed(a: &Quad, b: &Quad) -> IouOutcome {
    // Fixed argument order makes the result bit-for-bit symmetric.
    let (a, b) = if cmp_quads(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    let (pa, fa) = a.convex_polygon();
    let (pb, fb) = b.convex_polygon();
    let area_a = polygon_area(&pa);
    let area_b = polygon_area(&pb);
    let inter = intersection_area(&pa, &pb);
    let union = area_a + area_b - inter;
    let iou = if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    };
    IouOutcome {
        iou,
        hull_fallback: fa || fb,
    }
}

pub fn quad_iou(a: &Quad, b: &Quad) -> f64 {
    quad_iou_detailed(a, b).iou
}

fn cmp_quads(a: &Quad, b: &Quad) -> Ordering {
    a.vertices
        .iter()
        .zip(b.vertices.iter())
        .map(|(p, q)| p.lex_cmp(q))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(c: [f64; 8]) -> [Point2; 4] {
        [
            Point2::new(c[0], c[1]),
            Point2::new(c[2], c[3]),
            Point2::new(c[4], c[5]),
            Point2::new(c[6], c[7]),
        ]
    }

    #[test]
    fn canonical_rectangle_is_unchanged() {
        let raw = pts([0.0, 0.0, 10.0, 0.0, 10.0, 5.0, 0.0, 5.0]);
        let q = Quad::new(raw, QuadMode::Strict).unwrap();
        assert_eq!(q.vertices(), &raw);
    }

    #[test]
    fn counter_clockwise_input_is_reversed() {
        let raw = pts([0.0, 0.0, 0.0, 5.0, 10.0, 5.0, 10.0, 0.0]);
        let q = Quad::new(raw, QuadMode::Strict).unwrap();
        assert_eq!(q.vertices(), &pts([0.0, 0.0, 10.0, 0.0, 10.0, 5.0, 0.0, 5.0]));
    }

    #[test]
    fn start_vertex_rotated_into_place() {
        let raw = pts([10.0, 5.0, 0.0, 5.0, 0.0, 0.0, 10.0, 0.0]);
        let q = Quad::new(raw, QuadMode::Strict).unwrap();
        assert_eq!(q.vertices()[0], Point2::new(0.0, 0.0));
        assert!(signed_area(q.vertices()) > 0.0);
    }

    #[test]
    fn start_vertex_tie_prefers_smaller_y() {
        // (0,2) and (2,0) both have x + y = 2.
        let raw = pts([2.0, 0.0, 4.0, 2.0, 2.0, 4.0, 0.0, 2.0]);
        let q = Quad::new(raw, QuadMode::Strict).unwrap();
        assert_eq!(q.vertices()[0], Point2::new(2.0, 0.0));
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let raw = pts([0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        for mode in [QuadMode::Strict, QuadMode::Lenient] {
            assert_eq!(
                Quad::new(raw, mode),
                Err(GeometryError::DegenerateQuad(DegenerateReason::ZeroArea))
            );
        }
    }

    #[test]
    fn bow_tie_rejected_strict_repaired_lenient() {
        let raw = pts([0.0, 0.0, 10.0, 5.0, 10.0, 0.0, 0.0, 5.0]);
        assert_eq!(
            Quad::new(raw, QuadMode::Strict),
            Err(GeometryError::DegenerateQuad(DegenerateReason::SelfIntersecting))
        );
        let q = Quad::new(raw, QuadMode::Lenient).unwrap();
        assert!((q.area() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let raw = pts([0.0, f64::NAN, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        assert_eq!(Quad::new(raw, QuadMode::Lenient), Err(GeometryError::NonFinite));
    }

    #[test]
    fn shoelace_areas() {
        let square = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert_eq!(polygon_area(&square), 1.0);
        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        assert_eq!(polygon_area(&tri), 0.5);
        let line = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)];
        assert_eq!(polygon_area(&line), 0.0);
    }

    #[test]
    fn iou_identity_disjoint_and_shifted() {
        let a = Quad::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(quad_iou(&a, &a), 1.0);
        let far = Quad::rect(3.0, 0.0, 4.0, 1.0).unwrap();
        assert_eq!(quad_iou(&a, &far), 0.0);
        let shifted = Quad::rect(0.5, 0.5, 1.5, 1.5).unwrap();
        assert!((quad_iou(&a, &shifted) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn concave_quad_uses_hull() {
        // Dart shape: (2,1) is a reflex vertex.
        let dart = Quad::from_coords([0.0, 0.0, 4.0, 0.0, 2.0, 1.0, 2.0, 4.0], QuadMode::Strict).unwrap();
        assert!(!dart.is_convex());
        let out = quad_iou_detailed(&dart, &dart);
        assert!(out.hull_fallback);
        assert!((out.iou - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0),
            Point2::new(0.0, 2.0),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(signed_area(&hull) > 0.0);
        assert_eq!(polygon_area(&hull), 4.0);
    }
}
