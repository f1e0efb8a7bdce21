//! Shape sources: COCO-style polygon annotations and a seeded synthetic
//! generator.
//!
//! The accepted annotation schema is a subset of COCO instances:
//!
//! ```json
//! {
//!   "annotations": [
//!     {"id": 1, "category_id": 3, "bbox": [x, y, w, h],
//!      "segmentation": [[x1, y1, x2, y2, ...], ...]}
//!   ],
//!   "categories": [{"id": 3, "name": "car"}]
//! }
//! ```
//!
//! `bbox` and `categories` are optional. Records that cannot be used are
//! collected in [`LoadReport::rejected`] instead of failing the whole file.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::geometry::{BoundingBox, Point, Polygon, VERTEX_TOLERANCE};
use crate::{Error, Result};

/// Slack allowed between a record's `bbox` and its polygon, for source rounding.
pub const BBOX_SLACK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedInstance {
    pub id: u64,
    pub category: String,
    pub polygon: Polygon,
    pub bbox: BoundingBox,
    /// The segmentation had several parts; `polygon` is the largest.
    pub multi_part: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// Position in the `annotations` array.
    pub index: usize,
    pub id: Option<u64>,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.id {
            Some(id) => write!(f, "annotation {} (id {id}): {}", self.index, self.reason),
            None => write!(f, "annotation {}: {}", self.index, self.reason),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub instances: Vec<AnnotatedInstance>,
    pub rejected: Vec<Rejection>,
}

pub fn load_annotations(path: &Path) -> Result<LoadReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text)
}

/// Parses an annotation document. Only a document that is not JSON or has
/// no `annotations` array is an error; bad records are rejected one by one.
pub fn parse_annotations(text: &str) -> Result<LoadReport> {
    let doc: Value = serde_json::from_str(text)?;
    let annotations = doc
        .get("annotations")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("expected an object with an \"annotations\" array".into()))?;
    let names = category_names(&doc);

    let mut report = LoadReport::default();
    for (index, record) in annotations.iter().enumerate() {
        match parse_record(record, &names) {
            Ok(instance) => report.instances.push(instance),
            Err(reason) => report.rejected.push(Rejection {
                index,
                id: record.get("id").and_then(Value::as_u64),
                reason,
            }),
        }
    }
    Ok(report)
}

fn category_names(doc: &Value) -> HashMap<u64, String> {
    let mut names = HashMap::new();
    for cat in doc.get("categories").and_then(Value::as_array).into_iter().flatten() {
        if let (Some(id), Some(name)) = (cat.get("id").and_then(Value::as_u64), cat.get("name").and_then(Value::as_str)) {
            names.insert(id, name.to_owned());
        }
    }
    names
}

fn parse_record(record: &Value, names: &HashMap<u64, String>) -> std::result::Result<AnnotatedInstance, String> {
    let obj = record.as_object().ok_or("record is not an object")?;
    let id = obj.get("id").and_then(Value::as_u64).ok_or("missing or invalid id")?;
    let category_id = obj
        .get("category_id")
        .and_then(Value::as_u64)
        .ok_or("missing or invalid category_id")?;
    let category = names.get(&category_id).cloned().unwrap_or_else(|| category_id.to_string());

    let parts = match obj.get("segmentation") {
        Some(Value::Array(parts)) => parts,
        Some(Value::Object(_)) => return Err("RLE segmentation not supported; polygons only".into()),
        Some(_) => return Err("malformed segmentation".into()),
        None => return Err("missing segmentation".into()),
    };
    if parts.is_empty() {
        return Err("empty segmentation".into());
    }
    let polygons = parts.iter().map(parse_part).collect::<std::result::Result<Vec<_>, _>>()?;
    let multi_part = polygons.len() > 1;
    let polygon = polygons
        .into_iter()
        .max_by(|a, b| a.area().total_cmp(&b.area()))
        .expect("at least one part");

    let bbox = match obj.get("bbox") {
        None | Some(Value::Null) => polygon.bounding_box(),
        Some(v) => {
            let xywh = v
                .as_array()
                .filter(|a| a.len() == 4)
                .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
                .ok_or("bbox must be [x, y, w, h]")?;
            BoundingBox::from_xywh(xywh[0], xywh[1], xywh[2], xywh[3]).map_err(|e| e.to_string())?
        }
    };
    if !polygon.vertices().iter().all(|&p| bbox.contains(p, BBOX_SLACK)) {
        return Err("bbox does not contain the polygon".into());
    }
    Ok(AnnotatedInstance { id, category, polygon, bbox, multi_part })
}

fn parse_part(part: &Value) -> std::result::Result<Polygon, String> {
    let coords = part.as_array().ok_or("segmentation part is not a coordinate list")?;
    if coords.len() % 2 != 0 {
        return Err("odd coordinate count".into());
    }
    let values = coords
        .iter()
        .map(|v| v.as_f64().filter(|x| x.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or("non-numeric coordinate")?;
    let mut points: Vec<Point> = Vec::with_capacity(values.len() / 2);
    for pair in values.chunks_exact(2) {
        let p = Point::new(pair[0], pair[1]);
        // Annotation tools often repeat points; drop consecutive duplicates.
        if points.last().is_none_or(|&q| q.distance(p) > VERTEX_TOLERANCE) {
            points.push(p);
        }
    }
    while points.len() > 1 && points[0].distance(*points.last().unwrap()) <= VERTEX_TOLERANCE {
        points.pop();
    }
    if points.len() < 3 {
        return Err("polygon with fewer than 3 points".into());
    }
    Polygon::new(points).map_err(|e| e.to_string())
}

/// Serializes instances in the same annotation schema [`parse_annotations`]
/// reads. Numeric category labels keep their id; other labels get fresh ids.
pub fn annotations_to_string(instances: &[AnnotatedInstance]) -> String {
    let mut ids: BTreeMap<&str, u64> = BTreeMap::new();
    for inst in instances {
        if let Ok(id) = inst.category.parse::<u64>() {
            ids.insert(&inst.category, id);
        }
    }
    let mut next = ids.values().copied().max().unwrap_or(0) + 1;
    for inst in instances {
        ids.entry(&inst.category).or_insert_with(|| {
            next += 1;
            next - 1
        });
    }
    let annotations: Vec<Value> = instances
        .iter()
        .map(|inst| {
            let flat: Vec<f64> = inst.polygon.vertices().iter().flat_map(|p| [p.x, p.y]).collect();
            json!({
                "id": inst.id,
                "category_id": ids[inst.category.as_str()],
                "bbox": inst.bbox.to_xywh(),
                "area": inst.polygon.area(),
                "segmentation": [flat],
            })
        })
        .collect();
    let mut by_id: Vec<(u64, &str)> = ids.iter().map(|(name, id)| (*id, *name)).collect();
    by_id.sort();
    let categories: Vec<Value> = by_id.into_iter().map(|(id, name)| json!({"id": id, "name": name})).collect();
    serde_json::to_string_pretty(&json!({"annotations": annotations, "categories": categories}))
        .expect("annotations serialize")
}

/// Wraps bare polygons as instances with ids `1..` and a shared category.
pub fn instances_from_polygons(polygons: Vec<Polygon>, category: &str) -> Vec<AnnotatedInstance> {
    polygons
        .into_iter()
        .enumerate()
        .map(|(i, polygon)| AnnotatedInstance {
            id: i as u64 + 1,
            category: category.to_owned(),
            bbox: polygon.bounding_box(),
            polygon,
            multi_part: false,
        })
        .collect()
}

/// Inclusive size range, serialized as `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct SizeRange {
    min: f64,
    max: f64,
}

impl SizeRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && min <= max && max.is_finite()) {
            return Err(Error::InvalidArgument(format!("size range [{min}, {max}] is invalid")));
        }
        Ok(SizeRange { min, max })
    }

    pub fn fixed(v: f64) -> Result<Self> {
        Self::new(v, v)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

impl TryFrom<[f64; 2]> for SizeRange {
    type Error = Error;
    fn try_from([min, max]: [f64; 2]) -> Result<Self> {
        Self::new(min, max)
    }
}

impl From<SizeRange> for [f64; 2] {
    fn from(r: SizeRange) -> Self {
        [r.min, r.max]
    }
}

/// Synthetic shape family. Every generated polygon is star-shaped around
/// its centroid, which is moved to the origin. `radius` is the
/// circumradius (outer radius for stars, semi-major axis for ellipses).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSpec {
    Circle { radius: SizeRange, vertices: usize },
    /// Minor axis is `radius * U(min_aspect, 1)`; random orientation.
    Ellipse { radius: SizeRange, vertices: usize, min_aspect: f64 },
    RegularPolygon { radius: SizeRange, sides: usize },
    /// `2 * spikes` vertices alternating between `radius` and `radius * inner_ratio`.
    Star { radius: SizeRange, spikes: usize, inner_ratio: f64 },
    RandomConvex { radius: SizeRange, vertices: usize },
    /// Jittered angles with radii `radius * (1 - spikiness * U(0, 1))`.
    RandomStarShaped { radius: SizeRange, vertices: usize, spikiness: f64 },
}

pub const MAX_VERTICES: usize = 100_000;
const MAX_ATTEMPTS: usize = 1000;

impl ShapeSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ShapeSpec::Circle { .. } => "circle",
            ShapeSpec::Ellipse { .. } => "ellipse",
            ShapeSpec::RegularPolygon { .. } => "regular-polygon",
            ShapeSpec::Star { .. } => "star",
            ShapeSpec::RandomConvex { .. } => "random-convex",
            ShapeSpec::RandomStarShaped { .. } => "random-star-shaped",
        }
    }

    pub const FAMILIES: [&'static str; 6] =
        ["circle", "ellipse", "regular-polygon", "star", "random-convex", "random-star-shaped"];

    /// Default parameters for a family name: sizes 20..100 px.
    pub fn default_for(family: &str) -> Result<Self> {
        let radius = SizeRange::new(20.0, 100.0)?;
        Ok(match family {
            "circle" => ShapeSpec::Circle { radius, vertices: 64 },
            "ellipse" => ShapeSpec::Ellipse { radius, vertices: 64, min_aspect: 0.3 },
            "regular-polygon" => ShapeSpec::RegularPolygon { radius, sides: 6 },
            "star" => ShapeSpec::Star { radius, spikes: 5, inner_ratio: 0.5 },
            "random-convex" => ShapeSpec::RandomConvex { radius, vertices: 12 },
            "random-star-shaped" => ShapeSpec::RandomStarShaped { radius, vertices: 24, spikiness: 0.5 },
            other => return Err(Error::InvalidArgument(format!("unknown shape family {other:?}"))),
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: ShapeSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let count_ok = |n: usize, min: usize| (min..=MAX_VERTICES).contains(&n);
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let ok = match *self {
            ShapeSpec::Circle { vertices, .. } => count_ok(vertices, 3),
            ShapeSpec::Ellipse { vertices, min_aspect, .. } => count_ok(vertices, 3) && min_aspect > 0.0 && min_aspect <= 1.0,
            ShapeSpec::RegularPolygon { sides, .. } => count_ok(sides, 3),
            ShapeSpec::Star { spikes, inner_ratio, .. } => count_ok(2 * spikes, 4) && unit(inner_ratio),
            ShapeSpec::RandomConvex { vertices, .. } => count_ok(vertices, 3),
            ShapeSpec::RandomStarShaped { vertices, spikiness, .. } => count_ok(vertices, 3) && (0.0..1.0).contains(&spikiness),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid {} parameters", self.family())))
        }
    }

    fn radius(&self) -> SizeRange {
        match *self {
            ShapeSpec::Circle { radius, .. }
            | ShapeSpec::Ellipse { radius, .. }
            | ShapeSpec::RegularPolygon { radius, .. }
            | ShapeSpec::Star { radius, .. }
            | ShapeSpec::RandomConvex { radius, .. }
            | ShapeSpec::RandomStarShaped { radius, .. } => radius,
        }
    }

    fn sample_vertices(&self, rng: &mut ChaCha8Rng) -> Vec<Point> {
        let r = self.radius().sample(rng);
        let ring = |n: usize, phase: f64, radius_at: &mut dyn FnMut(usize) -> f64| -> Vec<Point> {
            (0..n)
                .map(|i| Point::from_angle(phase + TAU * i as f64 / n as f64) * radius_at(i))
                .collect()
        };
        match *self {
            ShapeSpec::Circle { vertices, .. } => ring(vertices, 0.0, &mut |_| r),
            ShapeSpec::Ellipse { vertices, min_aspect, .. } => {
                let minor = r * if min_aspect < 1.0 { rng.gen_range(min_aspect..=1.0) } else { 1.0 };
                let rot = rng.gen_range(0.0..PI);
                let (s, c) = rot.sin_cos();
                (0..vertices)
                    .map(|i| {
                        let t = TAU * i as f64 / vertices as f64;
                        let (u, v) = (r * t.cos(), minor * t.sin());
                        Point::new(u * c - v * s, u * s + v * c)
                    })
                    .collect()
            }
            ShapeSpec::RegularPolygon { sides, .. } => {
                let phase = rng.gen_range(0.0..TAU / sides as f64);
                ring(sides, phase, &mut |_| r)
            }
            ShapeSpec::Star { spikes, inner_ratio, .. } => {
                let phase = rng.gen_range(0.0..TAU / spikes as f64);
                ring(2 * spikes, phase, &mut |i| if i % 2 == 0 { r } else { r * inner_ratio })
            }
            ShapeSpec::RandomConvex { vertices, .. } => {
                let pts = valtr_convex(vertices, rng);
                let c = crate::geometry::centroid(&pts).unwrap_or(Point::ORIGIN);
                let far = pts.iter().map(|&p| p.distance(c)).fold(0.0, f64::max);
                let scale = if far > 0.0 { r / far } else { 1.0 };
                pts.into_iter().map(|p| (p - c) * scale).collect()
            }
            ShapeSpec::RandomStarShaped { vertices, spikiness, .. } => {
                let step = TAU / vertices as f64;
                (0..vertices)
                    .map(|i| {
                        let angle = (i as f64 + rng.gen_range(-0.4..0.4)) * step;
                        let radius = r * (1.0 - spikiness * rng.gen_range(0.0..1.0));
                        Point::from_angle(angle) * radius
                    })
                    .collect()
            }
        }
    }
}

/// Uniformly random convex polygon (Valtr's construction), unscaled.
fn valtr_convex(n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    fn chain_vectors(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = (xs[0], xs[n - 1]);
        let (mut last_a, mut last_b) = (lo, lo);
        let mut out = Vec::with_capacity(n);
        for &x in &xs[1..n - 1] {
            if rng.gen::<bool>() {
                out.push(x - last_a);
                last_a = x;
            } else {
                out.push(last_b - x);
                last_b = x;
            }
        }
        out.push(hi - last_a);
        out.push(last_b - hi);
        out
    }
    let xv = chain_vectors(n, rng);
    let mut yv = chain_vectors(n, rng);
    yv.shuffle(rng);
    let mut vecs: Vec<Point> = xv.into_iter().zip(yv).map(|(x, y)| Point::new(x, y)).collect();
    vecs.sort_by(|a, b| a.y.atan2(a.x).total_cmp(&b.y.atan2(b.x)));
    let mut p = Point::ORIGIN;
    vecs.into_iter()
        .map(|v| {
            let here = p;
            p = p + v;
            here
        })
        .collect()
}

/// `count` polygons from `spec`, reproducible for a given `seed`. Each is
/// resampled until it is valid and star-shaped around its centroid, then
/// translated so the centroid is the origin.
pub fn generate(spec: &ShapeSpec, count: usize, seed: u64) -> Result<Vec<Polygon>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let poly = (0..MAX_ATTEMPTS)
            .find_map(|_| {
                let poly = Polygon::new(spec.sample_vertices(&mut rng)).ok()?;
                let c = poly.centroid();
                poly.is_star_shaped_from(c).then(|| poly.translate(-c))
            })
            .ok_or_else(|| Error::Degenerate(format!("could not generate a valid {} shape", spec.family())))?;
        out.push(poly);
    }
    Ok(out)
}
