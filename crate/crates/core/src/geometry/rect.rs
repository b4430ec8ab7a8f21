//! Minimum-area enclosing rectangles and the crop descriptors built on them.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{clip_convex, convex_hull, polygon_area, GeometryError, Point2, Quad, DEGENERATE_AREA};
use crate::annotation::ImageMeta;

const ANGLE_EPS: f64 = 1e-12;
const SQUARE_REL_EPS: f64 = 1e-9;

/// A rotated rectangle: `width` runs along the direction `angle` (radians
/// from +x, in `[0, pi)`), `height` along its perpendicular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CropSpec {
    pub center: Point2,
    pub width: f64,
    pub height: f64,
    pub angle: f64,
}

impl CropSpec {
    /// Builds a spec in canonical form: `width >= height`, angle in
    /// `[0, pi)`, and for squares in `[0, pi/2)`.
    pub fn canonical(center: Point2, width: f64, height: f64, angle: f64) -> Self {
        let (mut width, mut height, mut angle) = (width, height, angle);
        if height > width {
            std::mem::swap(&mut width, &mut height);
            angle += FRAC_PI_2;
        }
        let period = if width - height <= SQUARE_REL_EPS * width.max(1.0) {
            FRAC_PI_2
        } else {
            PI
        };
        angle = angle.rem_euclid(period);
        if period - angle < ANGLE_EPS {
            angle = 0.0;
        }
        Self {
            center,
            width,
            height,
            angle,
        }
    }

    /// Unit vectors along the width and height edges.
    pub fn axes(&self) -> (Point2, Point2) {
        let (s, c) = self.angle.sin_cos();
        (Point2::new(c, s), Point2::new(-s, c))
    }

    /// Corners in positive orientation, starting at `-u/2, -n/2`.
    pub fn corners(&self) -> [Point2; 4] {
        let (u, n) = self.axes();
        let hw = self.width / 2.0;
        let hh = self.height / 2.0;
        let at = |su: f64, sn: f64| {
            Point2::new(
                self.center.x + su * hw * u.x + sn * hh * n.x,
                self.center.y + su * hw * u.y + sn * hh * n.y,
            )
        };
        [at(-1.0, -1.0), at(1.0, -1.0), at(1.0, 1.0), at(-1.0, 1.0)]
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// True when `p` lies inside the rectangle, allowing `tol` pixels of slack.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let (u, n) = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.width / 2.0 + tol && d.dot(n).abs() <= self.height / 2.0 + tol
    }

    fn with_padding(self, pad: f64) -> Self {
        Self {
            width: self.width + 2.0 * pad,
            height: self.height + 2.0 * pad,
            ..self
        }
    }
}

/// Extents of `points` projected on the frame `(u, n)`, as a spec.
fn frame_bounds(points: &[Point2], u: Point2, n: Point2) -> (Point2, f64, f64) {
    let (mut lo_u, mut hi_u) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_n, mut hi_n) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let su = p.dot(u);
        let sn = p.dot(n);
        lo_u = lo_u.min(su);
        hi_u = hi_u.max(su);
        lo_n = lo_n.min(sn);
        hi_n = hi_n.max(sn);
    }
    let mu = (lo_u + hi_u) / 2.0;
    let mn = (lo_n + hi_n) / 2.0;
    let center = Point2::new(mu * u.x + mn * n.x, mu * u.y + mn * n.y);
    (center, hi_u - lo_u, hi_n - lo_n)
}

/// Rotating calipers over the convex hull: the optimal rectangle has one
/// side flush with a hull edge, so every edge direction is tried.
pub fn min_area_rect_points(points: &[Point2]) -> Option<CropSpec> {
    let hull = convex_hull(points);
    if hull.len() < 3 || polygon_area(&hull) < DEGENERATE_AREA {
        return None;
    }

    let mut best: Option<(f64, CropSpec)> = None;
    for i in 0..hull.len() {
        let edge = hull[(i + 1) % hull.len()] - hull[i];
        let len = edge.dot(edge).sqrt();
        let u = Point2::new(edge.x / len, edge.y / len);
        let n = Point2::new(-u.y, u.x);
        let (center, w, h) = frame_bounds(&hull, u, n);
        let area = w * h;
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let angle = u.y.atan2(u.x);
            best = Some((area, CropSpec::canonical(center, w, h, angle)));
        }
    }
    best.map(|(_, spec)| spec)
}

pub fn min_area_rect(quad: &Quad) -> CropSpec {
    // A valid quad always has positive hull area.
    min_area_rect_points(quad.vertices()).expect("quad has positive area")
}

/// A crop descriptor tied to an image, with a flag for whether the
/// rectangle had to be cut down to the image bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageCrop {
    pub spec: CropSpec,
    pub clamped: bool,
}

/// Min-area rectangle of `quad`, grown by `padding` pixels per side, then
/// clamped to the image.
///
/// Clamping happens in the rectangle's own frame: the result is the
/// smallest rectangle at the same angle enclosing the part of the original
/// that lies inside the image.
pub fn crop_spec_for_quad(quad: &Quad, image: &ImageMeta, padding: f64) -> Result<ImageCrop, GeometryError> {
    let spec = min_area_rect(quad).with_padding(padding.max(0.0));
    let (w, h) = (f64::from(image.width), f64::from(image.height));
    let outside = || GeometryError::QuadOutsideImage {
        width: image.width,
        height: image.height,
    };
    if image.width == 0 || image.height == 0 {
        return Err(outside());
    }

    let corners = spec.corners();
    let inside = |p: &Point2| p.x >= 0.0 && p.y >= 0.0 && p.x <= w && p.y <= h;
    if corners.iter().all(inside) {
        return Ok(ImageCrop { spec, clamped: false });
    }

    let bounds = [
        Point2::new(0.0, 0.0),
        Point2::new(w, 0.0),
        Point2::new(w, h),
        Point2::new(0.0, h),
    ];
    let visible = clip_convex(&corners, &bounds);
    if polygon_area(&visible) < DEGENERATE_AREA {
        return Err(outside());
    }
    let (u, n) = spec.axes();
    let (center, cw, ch) = frame_bounds(&visible, u, n);
    Ok(ImageCrop {
        spec: CropSpec::canonical(center, cw, ch, spec.angle),
        clamped: true,
    })
}
