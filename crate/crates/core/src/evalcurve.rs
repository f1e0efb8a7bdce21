//! Reconstruction fidelity as a function of the number of kept coefficients.
//!
//! Each instance is encoded from its ground-truth contour (no network is
//! involved), truncated, decoded and compared with the source polygon by
//! rasterized IoU. The result is a curve of IoU statistics against the
//! parameter count `2K`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{encode_cartesian, encode_polar, Representation, ShapeCode, TruncationMode};
use crate::geometry::{polygon_iou, BoundingBox, Point, Polygon};
use crate::losses::cartesian_target;
use crate::radial::extract_at_centroid;
use crate::{Error, Result};

/// Kept-coefficient counts of the default sweep at `N = 90`.
pub const DEFAULT_KS: [usize; 12] = [1, 2, 3, 4, 6, 9, 12, 18, 24, 30, 36, 45];

pub const CSV_HEADER: [&str; 5] = ["parameters", "mean_iou", "median_iou", "p10_iou", "n_instances"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Real parameter count, `2K`.
    pub parameters: usize,
    pub mean_iou: f64,
    pub median_iou: f64,
    pub p10_iou: f64,
    pub n_instances: usize,
}

impl CurvePoint {
    pub fn kept(&self) -> usize {
        self.parameters / 2
    }

    /// Statistics of a set of IoU values.
    pub fn from_ious(kept: usize, ious: &[f64]) -> Self {
        let mut sorted = ious.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = if sorted.is_empty() { 0.0 } else { sorted.iter().sum::<f64>() / sorted.len() as f64 };
        CurvePoint {
            parameters: 2 * kept,
            mean_iou: mean,
            median_iou: percentile(&sorted, 0.5),
            p10_iou: percentile(&sorted, 0.1),
            n_instances: sorted.len(),
        }
    }
}

/// Linear-interpolation percentile of sorted data; 0 for empty input.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig {
    pub n_points: usize,
    pub mode: TruncationMode,
    pub representation: Representation,
    pub resolution: usize,
}

impl CurveConfig {
    pub fn new(n_points: usize, mode: TruncationMode) -> Self {
        CurveConfig {
            n_points,
            mode,
            representation: Representation::Polar,
            resolution: crate::DEFAULT_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub points: Vec<CurvePoint>,
    /// Mean L2 distance between the truncated and the full reconstruction
    /// (ray lengths for polar, point coordinates for Cartesian), per K.
    pub l2_error: Vec<f64>,
    /// Mean IoU of the untruncated sampled contour: the ceiling of the curve.
    pub raw_iou: f64,
    /// Instances whose sampled contour could not be built.
    pub skipped: usize,
    /// Decodes that did not form a valid polygon and were scored as IoU 0.
    pub degenerate: usize,
}

struct Encoded {
    source: Polygon,
    full: ShapeCode,
    samples: Vec<f64>,
}

fn encode_instance(poly: &Polygon, config: &CurveConfig) -> Result<Encoded> {
    let n = config.n_points;
    let full_k = TruncationMode::Symmetric.max_kept(n);
    let (full, samples) = match config.representation {
        Representation::Polar => {
            let rc = extract_at_centroid(poly, n)?.contour;
            let descriptor = encode_polar(&rc, full_k, TruncationMode::Symmetric)?;
            (ShapeCode::Polar { descriptor, center: rc.center() }, rc.rays().to_vec())
        }
        Representation::Cartesian => {
            let contour = cartesian_target(poly, n)?;
            let samples = contour.offsets().iter().flat_map(|p| [p.x, p.y]).collect();
            (ShapeCode::Cartesian(encode_cartesian(&contour, full_k, TruncationMode::Symmetric)?), samples)
        }
    };
    Ok(Encoded { source: poly.clone(), full, samples })
}

/// Unclamped decoded samples in the same layout as `Encoded::samples`.
fn decoded_samples(code: &ShapeCode) -> Vec<f64> {
    match code {
        ShapeCode::Polar { descriptor, .. } => descriptor.decode_real(),
        ShapeCode::Cartesian(c) => {
            let xs = c.x().decode_real();
            let ys = c.y().decode_real();
            xs.into_iter().zip(ys).flat_map(|(x, y)| [x, y]).collect()
        }
    }
}

/// IoU of a decoded contour against `source`; `None` if the decoded points
/// do not form a polygon.
fn decoded_iou(points: Vec<Point>, source: &Polygon, resolution: usize) -> Result<Option<f64>> {
    match Polygon::new(points) {
        Ok(poly) => polygon_iou(&poly, source, resolution).map(Some),
        Err(_) => Ok(None),
    }
}

/// Runs the sweep. `ks` must be strictly ascending and valid for the mode;
/// per-instance failures are counted, not fatal.
pub fn truncation_curve(instances: &[Polygon], ks: &[usize], config: &CurveConfig) -> Result<CurveReport> {
    if config.resolution < 64 {
        return Err(Error::InvalidArgument(format!("IoU resolution {} is below 64", config.resolution)));
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("ks must be strictly ascending".into()));
    }
    for &k in ks {
        config.mode.check(k, config.n_points)?;
    }

    let encoded: Vec<Option<Encoded>> = instances.par_iter().map(|p| encode_instance(p, config).ok()).collect();
    let encoded: Vec<Encoded> = encoded.into_iter().flatten().collect();
    let skipped = instances.len() - encoded.len();

    let raw: Vec<Option<f64>> = encoded
        .par_iter()
        .map(|e| {
            let points = match &e.full {
                ShapeCode::Polar { center, .. } => {
                    let step = std::f64::consts::TAU / config.n_points as f64;
                    e.samples.iter().enumerate().map(|(i, &r)| *center + Point::from_angle(i as f64 * step) * r).collect()
                }
                ShapeCode::Cartesian(c) => e.samples.chunks_exact(2).map(|s| c.reference() + Point::new(s[0], s[1])).collect(),
            };
            decoded_iou(points, &e.source, config.resolution).ok().flatten()
        })
        .collect();
    let raw_iou = mean(&raw.iter().map(|v| v.unwrap_or(0.0)).collect::<Vec<_>>());

    let mut points = Vec::with_capacity(ks.len());
    let mut l2_error = Vec::with_capacity(ks.len());
    let mut degenerate = 0;
    for &k in ks {
        let per: Vec<(f64, Option<f64>)> = encoded
            .par_iter()
            .map(|e| -> Result<(f64, Option<f64>)> {
                let code = e.full.truncate(k, config.mode)?;
                let err = decoded_samples(&code)
                    .iter()
                    .zip(&e.samples)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                Ok((err, decoded_iou(code.decode_points()?, &e.source, config.resolution)?))
            })
            .collect::<Result<_>>()?;
        let ious: Vec<f64> = per.iter().map(|(_, iou)| iou.unwrap_or(0.0)).collect();
        degenerate += per.iter().filter(|(_, iou)| iou.is_none()).count();
        l2_error.push(mean(&per.iter().map(|(e, _)| *e).collect::<Vec<_>>()));
        points.push(CurvePoint::from_ious(k, &ious));
    }
    Ok(CurveReport { points, l2_error, raw_iou, skipped, degenerate })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn curve_csv_string(curve: &[CurvePoint]) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for p in curve {
        writeln!(out, "{},{:.6},{:.6},{:.6},{}", p.parameters, p.mean_iou, p.median_iou, p.p10_iou, p.n_instances)
            .expect("write to string");
    }
    out
}

pub fn emit_curve_csv(curve: &[CurvePoint], out_path: &Path) -> Result<()> {
    std::fs::write(out_path, curve_csv_string(curve)).map_err(|e| Error::io(out_path, e))
}

pub fn parse_curve_csv(text: &str) -> Result<Vec<CurvePoint>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers()?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut points = Vec::new();
    for record in reader.deserialize() {
        let p: CurvePoint = record?;
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !p.parameters.is_multiple_of(2) || !(in_unit(p.mean_iou) && in_unit(p.median_iou) && in_unit(p.p10_iou)) {
            return Err(Error::Parse(format!("invalid curve row {p:?}")));
        }
        points.push(p);
    }
    Ok(points)
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    parse_curve_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Legend contents of a rendering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderLabel {
    pub kept: usize,
    pub iou: f64,
}

fn svg_path(poly: &Polygon) -> String {
    let mut d = String::new();
    for (i, p) in poly.vertices().iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        write!(d, "{cmd}{:.3},{:.3} ", p.x, p.y).expect("write to string");
    }
    d.push('Z');
    d
}

/// SVG with the original contour (solid) and the decoded one (dashed)
/// overlaid in image coordinates, plus a K / IoU legend.
pub fn render_svg(original: &Polygon, decoded: &Polygon, label: RenderLabel) -> String {
    let bb: BoundingBox = original.bounding_box().union(&decoded.bounding_box());
    let margin = 0.05 * bb.width().max(bb.height());
    let legend_h = 0.12 * bb.width().max(bb.height());
    let (x0, y0) = (bb.x_min - margin, bb.y_min - margin - legend_h);
    let (w, h) = (bb.width() + 2.0 * margin, bb.height() + 2.0 * margin + legend_h);
    let stroke = 0.004 * w.max(h);
    let font = 0.6 * legend_h;
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x0:.3} {y0:.3} {w:.3} {h:.3}\" width=\"512\" height=\"{ph:.0}\">\n",
            "  <path id=\"original\" d=\"{orig}\" fill=\"none\" stroke=\"#222222\" stroke-width=\"{sw:.3}\"/>\n",
            "  <path id=\"decoded\" d=\"{dec}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"{sw:.3}\" stroke-dasharray=\"{dash:.3}\"/>\n",
            "  <text x=\"{tx:.3}\" y=\"{ty:.3}\" font-family=\"sans-serif\" font-size=\"{fs:.3}\">K = {k}, IoU = {iou:.4}</text>\n",
            "</svg>\n"
        ),
        x0 = x0,
        y0 = y0,
        w = w,
        h = h,
        ph = 512.0 * h / w,
        orig = svg_path(original),
        dec = svg_path(decoded),
        sw = stroke,
        dash = 4.0 * stroke,
        tx = x0 + margin,
        ty = y0 + margin + font,
        fs = font,
        k = label.kept,
        iou = label.iou,
    )
}

pub fn render_contours(original: &Polygon, decoded: &Polygon, label: RenderLabel, out_path: &Path) -> Result<()> {
    std::fs::write(out_path, render_svg(original, decoded, label)).map_err(|e| Error::io(out_path, e))
}
