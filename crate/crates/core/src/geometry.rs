//! Polygon primitives: area, centroid, bounding box, ray casting, containment
//! and rasterized IoU.
//!
//! Polygons are simple closed vertex rings. The last vertex connects back to
//! the first; it is never repeated.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Two vertices closer than this are considered identical.
pub const VERTEX_TOLERANCE: f64 = 1e-9;

/// Ray hits closer than this along the ray are merged into one.
pub const HIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point { x: c, y: s }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
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

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
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

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned box with strictly positive extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidBoundingBox(format!(
                "({x_min}, {y_min}, {x_max}, {y_max}) has no positive extent"
            )));
        }
        Ok(BoundingBox { x_min, y_min, x_max, y_max })
    }

    /// Box from COCO's `[x, y, width, height]` layout.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn translate(&self, v: Point) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min + v.x,
            y_min: self.y_min + v.y,
            x_max: self.x_max + v.x,
            y_max: self.y_max + v.y,
        }
    }

    /// Whether `p` lies inside the box grown by `slack` on every side.
    pub fn contains(&self, p: Point, slack: f64) -> bool {
        p.x >= self.x_min - slack
            && p.x <= self.x_max + slack
            && p.y >= self.y_min - slack
            && p.y <= self.y_max + slack
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.width(), self.height()]
    }
}

/// Closed polygon with at least three vertices, no repeated consecutive
/// vertices and nonzero signed area.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon(format!("vertex {i} is not finite")));
        }
        let n = vertices.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i].distance(vertices[j]) <= VERTEX_TOLERANCE {
                return Err(Error::InvalidPolygon(format!(
                    "vertices {i} and {j} coincide"
                )));
            }
        }
        let area = signed_area(&vertices);
        let extent = extent_sq(&vertices);
        if area.is_nan() || area.abs() <= 1e-12 * extent {
            return Err(Error::InvalidPolygon("zero signed area".into()));
        }
        Ok(Polygon { vertices })
    }

    /// Builds a polygon from `(x, y)` pairs.
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().copied().map(Point::from).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area; positive when vertices run counterclockwise in a y-up frame.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Area-weighted centroid of the enclosed region.
    pub fn centroid(&self) -> Point {
        // Area is nonzero by construction.
        centroid(&self.vertices).expect("validated polygon has nonzero area")
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut bb = BoundingBox {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for p in &self.vertices {
            bb.x_min = bb.x_min.min(p.x);
            bb.y_min = bb.y_min.min(p.y);
            bb.x_max = bb.x_max.max(p.x);
            bb.y_max = bb.y_max.max(p.y);
        }
        bb
    }

    pub fn translate(&self, v: Point) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&p| p + v).collect() }
    }

    /// Same ring with counterclockwise (positive signed area) orientation.
    pub fn counterclockwise(&self) -> Polygon {
        let mut vertices = self.vertices.clone();
        if self.signed_area() < 0.0 {
            vertices.reverse();
        }
        Polygon { vertices }
    }

    /// Even-odd point containment.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether every edge is seen from `center` with strictly increasing
    /// angle, i.e. the ring is star-shaped around `center` with `center`
    /// strictly inside.
    pub fn is_star_shaped_from(&self, center: Point) -> bool {
        let orientation = self.signed_area().signum();
        let mut total = 0.0;
        for (a, b) in self.edges() {
            let (u, v) = (a - center, b - center);
            let c = u.cross(v) * orientation;
            if c <= 0.0 {
                return false;
            }
            total += c.atan2(u.dot(v));
        }
        // One full turn, not several.
        (total - std::f64::consts::TAU).abs() < 1e-6
    }

    /// Distances along the ray from `origin` at `angle` to every boundary hit.
    pub fn ray_intersections(&self, origin: Point, angle: f64) -> Vec<f64> {
        ray_intersections(self, origin, angle)
    }
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum();
    0.5 * twice
}

fn extent_sq(vertices: &[Point]) -> f64 {
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in vertices {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (hi - lo).norm_sq()
}

/// Area-weighted centroid of a vertex ring. Fails on zero-area rings.
pub fn centroid(vertices: &[Point]) -> Result<Point> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Degenerate(format!("{n} vertices enclose no area")));
    }
    // Relative to the first vertex to limit cancellation far from the origin.
    let o = vertices[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = vertices[i] - o;
        let q = vertices[(i + 1) % n] - o;
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if a2.is_nan() || a2.abs() <= 1e-12 * extent_sq(vertices) {
        return Err(Error::Degenerate("zero-area polygon has no centroid".into()));
    }
    Ok(Point::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)))
}

pub fn bounding_box(poly: &Polygon) -> BoundingBox {
    poly.bounding_box()
}

/// All distances `t >= 0` at which `origin + t * (cos angle, sin angle)` lies
/// on an edge, ascending. Segment endpoints are inclusive; hits closer than
/// [`HIT_TOLERANCE`] (a ray through a vertex touches two edges) are merged.
/// An edge collinear with the ray contributes its endpoints.
pub fn ray_intersections(poly: &Polygon, origin: Point, angle: f64) -> Vec<f64> {
    let dir = Point::from_angle(angle);
    let mut hits = Vec::new();
    for (a, b) in poly.edges() {
        let edge = b - a;
        let ao = a - origin;
        let denom = dir.cross(edge);
        let scale = edge.norm().max(1.0);
        if denom.abs() <= 1e-12 * scale {
            // Parallel: only a collinear edge can touch the ray.
            if ao.cross(dir).abs() <= 1e-9 * scale.max(ao.norm()) {
                let ta = ao.dot(dir);
                let tb = (b - origin).dot(dir);
                if ta.min(tb) <= 0.0 && ta.max(tb) >= 0.0 {
                    hits.push(0.0);
                }
                hits.extend([ta, tb].into_iter().filter(|&t| t >= 0.0));
            }
            continue;
        }
        let t = ao.cross(edge) / denom;
        let u = ao.cross(dir) / denom;
        let u_tol = 1e-12;
        if (-u_tol..=1.0 + u_tol).contains(&u) && t >= -HIT_TOLERANCE {
            hits.push(t.max(0.0));
        }
    }
    hits.sort_by(f64::total_cmp);
    hits.dedup_by(|later, earlier| (*later - *earlier).abs() <= HIT_TOLERANCE);
    hits
}

/// Regular sampling grid: `nx * ny` pixels of size `dx * dy` starting at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Point,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// `resolution` pixels along each side of `bbox`.
    pub fn covering(bbox: &BoundingBox, resolution: usize) -> Self {
        Grid {
            origin: Point::new(bbox.x_min, bbox.y_min),
            dx: bbox.width() / resolution as f64,
            dy: bbox.height() / resolution as f64,
            nx: resolution,
            ny: resolution,
        }
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.dx,
            self.origin.y + (j as f64 + 0.5) * self.dy,
        )
    }

    pub fn pixel_area(&self) -> f64 {
        self.dx * self.dy
    }
}

/// Row-major pixel mask over a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub grid: Grid,
    pub pixels: Vec<bool>,
}

impl Raster {
    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.pixels[j * self.grid.nx + i]
    }

    /// Centers of all set pixels.
    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        let nx = self.grid.nx;
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &set)| set)
            .map(move |(idx, _)| self.grid.pixel_center(idx % nx, idx / nx))
    }
}

/// Marks every pixel whose center lies inside `poly` (even-odd rule).
pub fn rasterize(poly: &Polygon, grid: Grid) -> Raster {
    let mut pixels = vec![false; grid.nx * grid.ny];
    let mut xs = Vec::new();
    for j in 0..grid.ny {
        let yc = grid.origin.y + (j as f64 + 0.5) * grid.dy;
        xs.clear();
        for (a, b) in poly.edges() {
            if (a.y > yc) != (b.y > yc) {
                xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        let row = &mut pixels[j * grid.nx..(j + 1) * grid.nx];
        for span in xs.chunks_exact(2) {
            let first = column_at_or_after(&grid, span[0]);
            let end = column_at_or_after(&grid, span[1]);
            row[first..end].iter_mut().for_each(|p| *p = true);
        }
    }
    Raster { grid, pixels }
}

/// Index of the first pixel column whose center is `>= x`, clamped to the grid.
fn column_at_or_after(grid: &Grid, x: f64) -> usize {
    let i = ((x - grid.origin.x) / grid.dx - 0.5).ceil();
    i.clamp(0.0, grid.nx as f64) as usize
}

/// Rasterized intersection over union on a `resolution x resolution` grid
/// spanning the union of both bounding boxes.
pub fn polygon_iou(a: &Polygon, b: &Polygon, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!(
            "IoU resolution must be at least 64, got {resolution}"
        )));
    }
    let grid = Grid::covering(&a.bounding_box().union(&b.bounding_box()), resolution);
    let ra = rasterize(a, grid);
    let rb = rasterize(b, grid);
    let (mut inter, mut union) = (0usize, 0usize);
    for (&pa, &pb) in ra.pixels.iter().zip(&rb.pixels) {
        inter += (pa && pb) as usize;
        union += (pa || pb) as usize;
    }
    if union == 0 {
        return Err(Error::EmptyRaster);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    use super::*;

    fn square(half: f64) -> Polygon {
        Polygon::from_coords(&[(-half, -half), (half, -half), (half, half), (-half, half)]).unwrap()
    }

    fn unit_square_at(x: f64) -> Polygon {
        Polygon::from_coords(&[(x, 0.0), (x + 1.0, 0.0), (x + 1.0, 1.0), (x, 1.0)]).unwrap()
    }

    #[test]
    fn rejects_invalid_polygons() {
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).is_err());
        // closing edge duplicate
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]).is_err());
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, f64::NAN), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn centroid_of_symmetric_shapes() {
        let sq = unit_square_at(0.0);
        let c = sq.centroid();
        assert!((c.x - 0.5).abs() < 1e-15 && (c.y - 0.5).abs() < 1e-15);
        let tri = Polygon::from_coords(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)]).unwrap();
        let c = tri.centroid();
        assert!((c.x - 1.0).abs() < 1e-15 && (c.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn centroid_of_l_shape_matches_triangle_fan() {
        let coords = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)];
        let poly = Polygon::from_coords(&coords).unwrap();
        // Oracle: fan of signed triangles from an arbitrary apex.
        let apex = Point::new(5.0, -3.0);
        let (mut area, mut mx, mut my) = (0.0, 0.0, 0.0);
        for i in 0..coords.len() {
            let p = Point::from(coords[i]);
            let q = Point::from(coords[(i + 1) % coords.len()]);
            let a = 0.5 * (p - apex).cross(q - apex);
            area += a;
            mx += a * (apex.x + p.x + q.x) / 3.0;
            my += a * (apex.y + p.y + q.y) / 3.0;
        }
        let expected = Point::new(mx / area, my / area);
        let c = poly.centroid();
        assert!((c.x - expected.x).abs() < 1e-12, "{c:?} vs {expected:?}");
        assert!((c.y - expected.y).abs() < 1e-12);
        // Two unit-area pieces: the 2x1 bar (1, 0.5) and the 1x1 square (0.5, 1.5).
        assert!((c.x - 5.0 / 6.0).abs() < 1e-12 && (c.y - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_rejects_degenerate_ring() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(matches!(centroid(&pts), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bounding_boxes() {
        assert_eq!(unit_square_at(0.0).bounding_box(), BoundingBox::new(0.0, 0.0, 1.0, 1.0).unwrap());
        let tri = Polygon::from_coords(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)]).unwrap();
        assert_eq!(bounding_box(&tri), BoundingBox::new(0.0, 0.0, 3.0, 3.0).unwrap());
        let v = Point::new(2.5, -1.0);
        assert_eq!(tri.translate(v).bounding_box(), tri.bounding_box().translate(v));
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn ray_hits_square() {
        let sq = square(0.5);
        assert_eq!(sq.ray_intersections(Point::ORIGIN, 0.0), vec![0.5]);
        let diag = sq.ray_intersections(Point::ORIGIN, FRAC_PI_4);
        assert_eq!(diag.len(), 1, "corner counted once: {diag:?}");
        assert!((diag[0] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(sq.ray_intersections(Point::new(2.0, 0.0), 0.0).is_empty());
        // From outside, pointing back through the square.
        let through = sq.ray_intersections(Point::new(2.0, 0.0), PI);
        assert_eq!(through.len(), 2);
        assert!((through[0] - 1.5).abs() < 1e-12 && (through[1] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn ray_along_edge_reports_endpoints() {
        let sq = unit_square_at(0.0);
        let hits = sq.ray_intersections(Point::new(-1.0, 0.0), 0.0);
        assert_eq!(hits.len(), 2, "{hits:?}");
        assert!((hits[0] - 1.0).abs() < 1e-12 && (hits[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn containment() {
        let sq = unit_square_at(0.0);
        assert!(sq.contains(Point::new(0.5, 0.5)));
        assert!(!sq.contains(Point::new(1.5, 0.5)));
        let l = Polygon::from_coords(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]).unwrap();
        assert!(!l.contains(Point::new(1.5, 1.5)));
        assert!(l.contains(Point::new(0.5, 1.5)));
    }

    #[test]
    fn iou_cases() {
        let a = unit_square_at(0.0);
        assert!((polygon_iou(&a, &a, 512).unwrap() - 1.0).abs() < 1e-12);
        let iou = polygon_iou(&a, &unit_square_at(0.5), 512).unwrap();
        assert!((iou - 1.0 / 3.0).abs() < 0.01, "{iou}");
        assert_eq!(polygon_iou(&a, &unit_square_at(3.0), 512).unwrap(), 0.0);
        assert!(polygon_iou(&a, &a, 32).is_err());
    }

    #[test]
    fn raster_area_approximates_polygon_area() {
        let tri = Polygon::from_coords(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)]).unwrap();
        let grid = Grid::covering(&tri.bounding_box(), 512);
        let r = rasterize(&tri, grid);
        let area = r.count() as f64 * grid.pixel_area();
        assert!((area - 4.5).abs() < 0.02, "{area}");
    }

    #[test]
    fn star_shaped_detection() {
        let sq = square(1.0);
        assert!(sq.is_star_shaped_from(Point::ORIGIN));
        assert!(!sq.is_star_shaped_from(Point::new(3.0, 0.0)));
        let cw = Polygon::new(sq.vertices().iter().rev().copied().collect()).unwrap();
        assert!(cw.is_star_shaped_from(Point::ORIGIN));
        assert!(cw.counterclockwise().signed_area() > 0.0);
    }
}
