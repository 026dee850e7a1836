//! Planar primitives shared by the partition and initialization code.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// An affine function `a·x + b·y + c` on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Affine2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Affine2 {
    pub const ZERO: Affine2 = Affine2 { a: 0.0, b: 0.0, c: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// The line through `origin` whose normal is `normal`; positive on the normal side.
    pub fn through(origin: Point, normal: Point) -> Self {
        Self::new(normal.x, normal.y, -normal.dot(origin))
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }

    pub fn add_scaled(&mut self, other: &Affine2, s: f64) {
        self.a += other.a * s;
        self.b += other.b * s;
        self.c += other.c * s;
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of(points: &[Point]) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    pub fn overlaps(&self, other: &BBox, tol: f64) -> bool {
        self.min.x <= other.max.x + tol
            && other.min.x <= self.max.x + tol
            && self.min.y <= other.max.y + tol
            && other.min.y <= self.max.y + tol
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Signed area of a closed polygon (positive for counter-clockwise order).
pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += vertices[i].cross(vertices[(i + 1) % n]);
    }
    0.5 * s
}

/// Area centroid; falls back to the vertex average for degenerate polygons.
pub fn polygon_centroid(vertices: &[Point]) -> Point {
    let n = vertices.len();
    let a = signed_area(vertices);
    if n < 3 || a.abs() < 1e-300 {
        let s = vertices.iter().fold(Point::default(), |acc, &p| acc + p);
        return s * (1.0 / n.max(1) as f64);
    }
    // shift to the first vertex to limit cancellation
    let o = vertices[0];
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = vertices[i] - o;
        let q = vertices[(i + 1) % n] - o;
        let c = p.cross(q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    let f = 1.0 / (6.0 * a);
    Point::new(o.x + cx * f, o.y + cy * f)
}

/// Second central moments `(Ixx, Ixy, Iyy)` of a polygon's area, divided by its area.
pub fn polygon_covariance(vertices: &[Point]) -> (f64, f64, f64) {
    let c = polygon_centroid(vertices);
    let n = vertices.len();
    let a = signed_area(vertices);
    if n < 3 || a.abs() < 1e-300 {
        return (0.0, 0.0, 0.0);
    }
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = vertices[i] - c;
        let q = vertices[(i + 1) % n] - c;
        let w = p.cross(q);
        sxx += w * (p.x * p.x + p.x * q.x + q.x * q.x);
        syy += w * (p.y * p.y + p.y * q.y + q.y * q.y);
        sxy += w * (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y);
    }
    (sxx / (12.0 * a), sxy / (24.0 * a), syy / (12.0 * a))
}

/// Point-in-convex-polygon test for a counter-clockwise polygon with an
/// absolute distance tolerance.
pub fn convex_contains(vertices: &[Point], p: Point, tol: f64) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let e = b - a;
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        if e.cross(p - a) < -tol * len {
            return false;
        }
    }
    true
}

/// Euclidean distance from `p` to segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let e = b - a;
    let l2 = e.dot(e);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(e) / l2).clamp(0.0, 1.0);
    p.dist(a + e * t)
}

/// Intersection point of segments `[p0, p1]` and `[q0, q1]`, if any.
/// Collinear overlaps report the overlap endpoints that lie on both segments.
pub fn segment_intersections(p0: Point, p1: Point, q0: Point, q1: Point, tol: f64) -> Vec<Point> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    let rl = r.norm();
    let sl = s.norm();
    if rl == 0.0 || sl == 0.0 {
        return Vec::new();
    }
    if denom.abs() <= 1e-14 * rl * sl {
        // parallel: only collinear overlaps produce points
        if (q0 - p0).cross(r).abs() > tol * rl {
            return Vec::new();
        }
        let mut out = Vec::new();
        for cand in [p0, p1, q0, q1] {
            if segment_distance(cand, p0, p1) <= tol && segment_distance(cand, q0, q1) <= tol {
                out.push(cand);
            }
        }
        return out;
    }
    let qp = q0 - p0;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let tt = tol / rl;
    let tu = tol / sl;
    if t >= -tt && t <= 1.0 + tt && u >= -tu && u <= 1.0 + tu {
        vec![p0 + r * t.clamp(0.0, 1.0)]
    } else {
        Vec::new()
    }
}

/// Remove consecutive vertices closer than `tol` (cyclically).
pub fn dedup_ring(mut ring: Vec<Point>, tol: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(ring.len());
    for p in ring.drain(..) {
        if out.last().is_none_or(|q| q.dist(p) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= tol {
        out.pop();
    }
    out
}

/// Split a convex counter-clockwise polygon by the zero line of `g`.
///
/// Returns `(negative side, positive side)` when `g` changes sign strictly at
/// the vertices (beyond `rel_sign_tol` times the largest vertex magnitude) and
/// both pieces keep an area above `area_tol`; otherwise `None`.
pub fn split_convex(
    vertices: &[Point],
    g: &Affine2,
    rel_sign_tol: f64,
    geom_tol: f64,
    area_tol: f64,
) -> Option<(Vec<Point>, Vec<Point>)> {
    let vals: Vec<f64> = vertices.iter().map(|&p| g.eval(p)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = rel_sign_tol * scale;
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < -tol && hi > tol) {
        return None;
    }
    let s: Vec<f64> = vals.iter().map(|&v| if v.abs() <= tol { 0.0 } else { v }).collect();
    let n = vertices.len();
    let mut neg = Vec::with_capacity(n + 2);
    let mut pos = Vec::with_capacity(n + 2);
    for i in 0..n {
        let j = (i + 1) % n;
        let (p, si, sj) = (vertices[i], s[i], s[j]);
        if si <= 0.0 {
            neg.push(p);
        }
        if si >= 0.0 {
            pos.push(p);
        }
        if (si < 0.0 && sj > 0.0) || (si > 0.0 && sj < 0.0) {
            let t = si / (si - sj);
            let q = p + (vertices[j] - p) * t;
            neg.push(q);
            pos.push(q);
        }
    }
    let neg = dedup_ring(neg, geom_tol);
    let pos = dedup_ring(pos, geom_tol);
    if signed_area(&neg) <= area_tol || signed_area(&pos) <= area_tol {
        return None;
    }
    Some((neg, pos))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    #[test]
    fn area_and_centroid_of_unit_square() {
        let sq = square();
        assert!((signed_area(&sq) - 1.0).abs() < 1e-15);
        let c = polygon_centroid(&sq);
        assert!((c.x - 0.5).abs() < 1e-15 && (c.y - 0.5).abs() < 1e-15);
    }

    #[test]
    fn covariance_of_unit_square() {
        let (xx, xy, yy) = polygon_covariance(&square());
        assert!((xx - 1.0 / 12.0).abs() < 1e-14);
        assert!((yy - 1.0 / 12.0).abs() < 1e-14);
        assert!(xy.abs() < 1e-14);
    }

    #[test]
    fn split_square_through_middle() {
        let g = Affine2::new(1.0, 0.0, -0.5);
        let (neg, pos) = split_convex(&square(), &g, 1e-10, 1e-12, 1e-14).unwrap();
        assert!((signed_area(&neg) - 0.5).abs() < 1e-14);
        assert!((signed_area(&pos) - 0.5).abs() < 1e-14);
        assert_eq!(neg.len(), 4);
    }

    #[test]
    fn split_through_vertex_keeps_triangles() {
        let g = Affine2::new(1.0, -1.0, 0.0);
        let (neg, pos) = split_convex(&square(), &g, 1e-10, 1e-12, 1e-14).unwrap();
        assert_eq!(neg.len(), 3);
        assert_eq!(pos.len(), 3);
    }

    #[test]
    fn line_on_edge_does_not_split() {
        let g = Affine2::new(1.0, 0.0, 0.0);
        assert!(split_convex(&square(), &g, 1e-10, 1e-12, 1e-14).is_none());
        let outside = Affine2::new(1.0, 0.0, 3.0);
        assert!(split_convex(&square(), &outside, 1e-10, 1e-12, 1e-14).is_none());
    }

    #[test]
    fn crossing_segments() {
        let pts = segment_intersections(
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.0),
            1e-12,
        );
        assert_eq!(pts.len(), 1);
        assert!((pts[0].x - 0.5).abs() < 1e-15);
    }
}
