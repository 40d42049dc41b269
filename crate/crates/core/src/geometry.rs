//! Planar and linear geometry for market cells.
//!
//! Cells of the market partition are intersections of bisector half-planes
//! clipped to a bounded window. In one dimension the same half-planes are
//! used with a zero `y` component and the result is an [`Interval`].

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for containment and collinearity, in window coordinates.
pub const EPS_GEOM: f64 = 1e-9;

/// A point in the feature space. One-dimensional markets keep `y == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub const fn on_line(x: f64) -> Self {
        Point { x, y: 0.0 }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Axis-aligned evaluation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        Aabb { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains_strictly(&self, p: Point, dimension: usize) -> bool {
        let in_x = p.x > self.min.x && p.x < self.max.x;
        if dimension == 1 {
            in_x
        } else {
            in_x && p.y > self.min.y && p.y < self.max.y
        }
    }

    /// Counter-clockwise rectangle.
    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon {
            vertices: vec![
                self.min,
                Point::new(self.max.x, self.min.y),
                self.max,
                Point::new(self.min.x, self.max.y),
            ],
        }
    }

    fn on_boundary(&self, p: Point) -> bool {
        (p.x - self.min.x).abs() <= EPS_GEOM
            || (p.x - self.max.x).abs() <= EPS_GEOM
            || (p.y - self.min.y).abs() <= EPS_GEOM
            || (p.y - self.max.y).abs() <= EPS_GEOM
    }
}

/// The closed set `{x : normal · x <= offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl HalfPlane {
    /// Signed distance from the boundary line; negative inside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        (self.normal.dot(p) - self.offset) / self.normal.norm()
    }

    pub fn contains(&self, p: Point, eps: f64) -> bool {
        self.signed_distance(p) <= eps
    }
}

/// Half-plane where a site at `xi` with additive weight `wi` is no more
/// expensive than a site at `xj` with weight `wj`, for the aggregate price
/// `w + ‖x − site‖²`.
pub fn bisector(xi: Point, wi: f64, xj: Point, wj: f64) -> Result<HalfPlane> {
    let delta = xj - xi;
    if delta.norm_sq() == 0.0 {
        return Err(Error::DegeneratePair { i: 0, j: 0 });
    }
    Ok(HalfPlane {
        normal: delta * 2.0,
        offset: wj - wi + xj.norm_sq() - xi.norm_sq(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    /// Counter-clockwise.
    pub vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Every turn is a left turn (or straight) within `eps`.
    pub fn is_convex(&self, eps: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return true;
        }
        (0..n).all(|k| {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % n];
            let c = self.vertices[(k + 2) % n];
            let e1 = b - a;
            let e2 = c - b;
            e1.cross(e2) >= -eps * e1.norm().max(1.0) * e2.norm().max(1.0)
        })
    }

    /// Point-in-polygon for a counter-clockwise convex polygon.
    pub fn contains(&self, p: Point, eps: f64) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        self.edges().all(|(a, b)| {
            let e = b - a;
            let len = e.norm();
            len == 0.0 || e.cross(p - a) / len >= -eps
        })
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len().max(1) as f64;
        let sum = self
            .vertices
            .iter()
            .fold(Point::default(), |acc, &v| acc + v);
        sum * (1.0 / n)
    }
}

/// Shoelace area.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    let twice: f64 = p.edges().map(|(a, b)| a.cross(b)).sum();
    (0.5 * twice).abs()
}

/// Result of clipping a window by a set of half-planes.
#[derive(Debug, Clone, PartialEq)]
pub enum Clipped {
    Empty,
    Inside(ConvexPolygon),
    TouchesWindow(ConvexPolygon),
}

impl Clipped {
    pub fn polygon(&self) -> Option<&ConvexPolygon> {
        match self {
            Clipped::Empty => None,
            Clipped::Inside(p) | Clipped::TouchesWindow(p) => Some(p),
        }
    }

    pub fn into_polygon(self) -> Option<ConvexPolygon> {
        match self {
            Clipped::Empty => None,
            Clipped::Inside(p) | Clipped::TouchesWindow(p) => Some(p),
        }
    }

    pub fn touches_window(&self) -> bool {
        matches!(self, Clipped::TouchesWindow(_))
    }
}

/// Clips `poly` in place against one half-plane (Sutherland–Hodgman step).
pub fn clip_polygon(poly: &[Point], plane: &HalfPlane, out: &mut Vec<Point>) {
    out.clear();
    let n = poly.len();
    if n == 0 {
        return;
    }
    let scale = plane.normal.norm();
    let dist = |p: Point| (plane.normal.dot(p) - plane.offset) / scale;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let da = dist(a);
        let db = dist(b);
        // exact classification; a tolerance here would keep vertices that lie
        // slightly outside and bias the area by O(EPS_GEOM · perimeter)
        let a_in = da <= 0.0;
        let b_in = db <= 0.0;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (da / (da - db)).clamp(0.0, 1.0);
            out.push(a + (b - a) * t);
        }
    }
    merge_close_vertices(out);
}

/// Drops repeated vertices. Only exact repeats: collapsing merely close
/// vertices on a long edge would shave off a sliver of real area.
fn merge_close_vertices(vertices: &mut Vec<Point>) {
    vertices.dedup();
    while vertices.len() > 1 && vertices[0] == *vertices.last().unwrap() {
        vertices.pop();
    }
}

/// Intersection of `planes` with the window rectangle.
pub fn intersect_halfplanes(planes: &[HalfPlane], window: &Aabb) -> Clipped {
    let mut current = window.to_polygon().vertices;
    let mut scratch = Vec::with_capacity(current.len() + 4);
    for plane in planes {
        clip_polygon(&current, plane, &mut scratch);
        std::mem::swap(&mut current, &mut scratch);
        if current.len() < 3 {
            return Clipped::Empty;
        }
    }
    let poly = ConvexPolygon { vertices: current };
    if poly.area() <= EPS_GEOM * EPS_GEOM {
        return Clipped::Empty;
    }
    if poly.vertices.iter().any(|&v| window.on_boundary(v)) {
        Clipped::TouchesWindow(poly)
    } else {
        Clipped::Inside(poly)
    }
}

/// One-dimensional counterpart: intersection of half-lines `a·x <= b`
/// (using the `x` component of each normal) with `[lo, hi]`.
pub fn intersect_halflines(planes: &[HalfPlane], lo: f64, hi: f64) -> Option<Interval> {
    let mut iv = Interval { lo, hi };
    for plane in planes {
        let a = plane.normal.x;
        let bound = plane.offset / a;
        if a > 0.0 {
            iv.hi = iv.hi.min(bound);
        } else if a < 0.0 {
            iv.lo = iv.lo.max(bound);
        } else if plane.offset < 0.0 {
            return None;
        }
    }
    (iv.hi >= iv.lo).then_some(iv)
}

/// Common boundary of two convex polygons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedEdge {
    pub length: f64,
    /// The closures intersect, possibly in a single point.
    pub exists: bool,
}

pub fn shared_edge(p: &ConvexPolygon, q: &ConvexPolygon) -> SharedEdge {
    let mut length = 0.0;
    for (a, b) in p.edges() {
        for (c, d) in q.edges() {
            length += collinear_overlap(a, b, c, d);
        }
    }
    if length > EPS_GEOM {
        return SharedEdge {
            length,
            exists: true,
        };
    }
    let touches = p
        .vertices
        .iter()
        .any(|&v| q.edges().any(|(c, d)| point_segment_distance(v, c, d) <= EPS_GEOM))
        || q
            .vertices
            .iter()
            .any(|&v| p.edges().any(|(a, b)| point_segment_distance(v, a, b) <= EPS_GEOM));
    SharedEdge {
        length: 0.0,
        exists: touches,
    }
}

fn collinear_overlap(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let dir = b - a;
    let len = dir.norm();
    if len <= EPS_GEOM {
        return 0.0;
    }
    let unit = dir * (1.0 / len);
    if unit.cross(c - a).abs() > EPS_GEOM || unit.cross(d - a).abs() > EPS_GEOM {
        return 0.0;
    }
    let (mut s, mut t) = (unit.dot(c - a), unit.dot(d - a));
    if s > t {
        std::mem::swap(&mut s, &mut t);
    }
    (t.min(len) - s.max(0.0)).max(0.0)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}
