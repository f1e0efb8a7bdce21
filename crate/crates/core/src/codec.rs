//! Fourier shape codec.
//!
//! Encoding is a forward DFT of the sampled contour followed by truncation to
//! the `K` lowest-frequency coefficients. Decoding zero-pads the spectrum back
//! to `N` entries and applies the inverse DFT
//!
//! ```text
//! p_n = (1/N) * sum_{k=0}^{N-1} x_k * exp(j*2*pi*k*n/N)
//! ```
//!
//! keeping the real part. Two truncation modes exist:
//!
//! * one-sided keeps `x_0..x_{K-1}` only, like a network that predicts an
//!   unconstrained low-frequency subset;
//! * symmetric also keeps the conjugate partners `x_{N-1}..x_{N-K+1}`, so the
//!   spectrum of a real signal stays conjugate-symmetric and decodes exactly.
//!
//! A descriptor with `K` kept coefficients has `2K` real parameters, the real
//! and imaginary parts of `x_0..x_{K-1}`. In symmetric mode the partners are
//! tied to them as complex conjugates.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft;
use crate::geometry::Point;
use crate::radial::RadialContour;
use crate::{Error, Result, EPSILON_RAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Polar,
    CartesianX,
    CartesianY,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Polar => "polar",
            Branch::CartesianX => "cartesian-x",
            Branch::CartesianY => "cartesian-y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    OneSided,
    #[default]
    Symmetric,
}

impl TruncationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TruncationMode::OneSided => "one-sided",
            TruncationMode::Symmetric => "symmetric",
        }
    }

    /// Largest valid kept count for an `n`-point spectrum.
    pub fn max_kept(&self, n: usize) -> usize {
        match self {
            TruncationMode::OneSided => n,
            TruncationMode::Symmetric => n / 2 + 1,
        }
    }

    pub fn check(&self, kept: usize, n: usize) -> Result<()> {
        let max = self.max_kept(n);
        if kept == 0 || kept > max {
            return Err(Error::TruncationOutOfRange { kept, max, mode: self.as_str() });
        }
        Ok(())
    }

    /// Whether spectrum index `k` survives truncation to `kept` coefficients.
    pub fn keeps(&self, k: usize, kept: usize, n: usize) -> bool {
        match self {
            TruncationMode::OneSided => k < kept,
            TruncationMode::Symmetric => k < kept || k + kept > n,
        }
    }
}

impl fmt::Display for TruncationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TruncationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-sided" => Ok(TruncationMode::OneSided),
            "symmetric" => Ok(TruncationMode::Symmetric),
            other => Err(Error::InvalidArgument(format!("unknown truncation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    #[default]
    Polar,
    Cartesian,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Polar => "polar",
            Representation::Cartesian => "cartesian",
        })
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polar" => Ok(Representation::Polar),
            "cartesian" => Ok(Representation::Cartesian),
            other => Err(Error::InvalidArgument(format!("unknown representation {other:?}"))),
        }
    }
}

/// Forward DFT of a real signal, `X_k = sum_n p_n * exp(-j*2*pi*k*n/N)`.
///
/// # Panics
/// If `signal` is empty.
pub fn dft(signal: &[f64]) -> Vec<Complex64> {
    let input: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft_complex(&input)
}

pub fn dft_complex(input: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); input.len()];
    fft::plan(input.len()).forward(input, &mut out);
    out
}

/// Inverse DFT with the `1/N` factor on this side.
///
/// # Panics
/// If `coefficients` is empty.
pub fn idft(coefficients: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); coefficients.len()];
    fft::plan(coefficients.len()).inverse(coefficients, &mut out);
    out
}

/// Real part of the inverse DFT.
///
/// The imaginary parts of `x_0` and (for even `N`) `x_{N/2}` cannot reach
/// the real part of the output; they are dropped before transforming so the
/// result is exactly independent of them rather than up to rounding.
pub fn idft_real(coefficients: &[Complex64]) -> Vec<f64> {
    let n = coefficients.len();
    let mut x = coefficients.to_vec();
    x[0].im = 0.0;
    if n.is_multiple_of(2) {
        x[n / 2].im = 0.0;
    }
    idft(&x).into_iter().map(|c| c.re).collect()
}

/// An `N`-point spectrum with all but `kept` low-frequency entries zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDescriptor {
    coefficients: Vec<Complex64>,
    kept: usize,
    branch: Branch,
    mode: TruncationMode,
}

impl FourierDescriptor {
    pub fn new(
        coefficients: Vec<Complex64>,
        kept: usize,
        branch: Branch,
        mode: TruncationMode,
    ) -> Result<Self> {
        let n = coefficients.len();
        if n == 0 {
            return Err(Error::InvalidDescriptor("empty spectrum".into()));
        }
        mode.check(kept, n)?;
        for (k, c) in coefficients.iter().enumerate() {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidDescriptor(format!("coefficient {k} is not finite")));
            }
            if !mode.keeps(k, kept, n) && *c != Complex64::default() {
                return Err(Error::InvalidDescriptor(format!(
                    "coefficient {k} must be zero under {mode} truncation to {kept}"
                )));
            }
        }
        Ok(FourierDescriptor { coefficients, kept, branch, mode })
    }

    /// Untruncated descriptor of a full spectrum.
    pub fn full(coefficients: Vec<Complex64>, branch: Branch) -> Result<Self> {
        let kept = coefficients.len();
        Self::new(coefficients, kept, branch, TruncationMode::OneSided)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn n_points(&self) -> usize {
        self.coefficients.len()
    }

    pub fn kept(&self) -> usize {
        self.kept
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn mode(&self) -> TruncationMode {
        self.mode
    }

    /// Real parameter count, `2 * kept`.
    pub fn parameter_count(&self) -> usize {
        2 * self.kept
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    pub fn truncate(&self, kept: usize, mode: TruncationMode) -> Result<Self> {
        let n = self.n_points();
        mode.check(kept, n)?;
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, &c)| if mode.keeps(k, kept, n) { c } else { Complex64::default() })
            .collect();
        Ok(FourierDescriptor { coefficients, kept, branch: self.branch, mode })
    }

    /// `[Re x_0, Im x_0, Re x_1, Im x_1, ...]` over the kept coefficients.
    pub fn parameters(&self) -> Vec<f64> {
        self.coefficients[..self.kept]
            .iter()
            .flat_map(|c| [c.re, c.im])
            .collect()
    }

    /// Descriptor with the same layout and new parameter values. In symmetric
    /// mode the conjugate partners are rewritten from the parameters.
    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.parameter_count() {
            return Err(Error::LengthMismatch { expected: self.parameter_count(), actual: params.len() });
        }
        let n = self.n_points();
        let mut coefficients = vec![Complex64::default(); n];
        for (k, pair) in params.chunks_exact(2).enumerate() {
            coefficients[k] = Complex64::new(pair[0], pair[1]);
        }
        if self.mode == TruncationMode::Symmetric {
            for k in 1..self.kept {
                let partner = n - k;
                if partner != k {
                    coefficients[partner] = coefficients[k].conj();
                }
            }
        }
        Self::new(coefficients, self.kept, self.branch, self.mode)
    }

    /// Real part of the zero-padded inverse DFT: the decoded samples.
    pub fn decode_real(&self) -> Vec<f64> {
        idft_real(&self.coefficients)
    }

    /// Transposed decoder Jacobian: maps `dL/dp_n` for every decoded sample
    /// to `dL/dtheta` over [`parameters`](Self::parameters).
    ///
    /// With `G = DFT(dL/dp)`, `dL/dRe x_k = Re G_k / N` and
    /// `dL/dIm x_k = Im G_k / N`; symmetric mode adds the partner terms.
    pub fn backpropagate(&self, sample_grad: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_points();
        if sample_grad.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: sample_grad.len() });
        }
        let g = dft(sample_grad);
        let scale = 1.0 / n as f64;
        let mut out = Vec::with_capacity(self.parameter_count());
        for k in 0..self.kept {
            let mut re = g[k].re * scale;
            let mut im = g[k].im * scale;
            if k == 0 || 2 * k == n {
                // inert imaginary part, see idft_real
                im = 0.0;
            } else if self.mode == TruncationMode::Symmetric {
                let partner = g[n - k];
                re += partner.re * scale;
                im -= partner.im * scale;
            }
            out.push(re);
            out.push(im);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> DescriptorJson {
        DescriptorJson {
            branch: self.branch,
            n_points: self.n_points(),
            kept: self.kept,
            mode: self.mode,
            coefficients: self.coefficients.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("descriptor serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: DescriptorJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

/// Serialized form: `{branch, n_points, kept, mode, coefficients: [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorJson {
    pub branch: Branch,
    pub n_points: usize,
    pub kept: usize,
    pub mode: TruncationMode,
    pub coefficients: Vec<[f64; 2]>,
}

impl TryFrom<DescriptorJson> for FourierDescriptor {
    type Error = Error;

    fn try_from(raw: DescriptorJson) -> Result<Self> {
        if raw.coefficients.len() != raw.n_points {
            return Err(Error::InvalidDescriptor(format!(
                "n_points is {} but {} coefficients given",
                raw.n_points,
                raw.coefficients.len()
            )));
        }
        let coefficients = raw.coefficients.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        FourierDescriptor::new(coefficients, raw.kept, raw.branch, raw.mode)
    }
}

impl From<&FourierDescriptor> for DescriptorJson {
    fn from(d: &FourierDescriptor) -> Self {
        d.to_json()
    }
}

pub fn truncate(desc: &FourierDescriptor, kept: usize, mode: TruncationMode) -> Result<FourierDescriptor> {
    desc.truncate(kept, mode)
}

/// Ordered contour samples stored as offsets from a reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointContour {
    points: Vec<Point>,
    reference: Point,
}

impl PointContour {
    pub const MIN_POINTS: usize = 3;

    pub fn new(points: Vec<Point>, reference: Point) -> Result<Self> {
        if points.len() < Self::MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "point contour needs at least {} points, got {}",
                Self::MIN_POINTS,
                points.len()
            )));
        }
        Ok(PointContour { points, reference })
    }

    /// Contour from absolute positions, stored relative to `reference`.
    pub fn from_absolute(points: &[Point], reference: Point) -> Result<Self> {
        Self::new(points.iter().map(|&p| p - reference).collect(), reference)
    }

    pub fn offsets(&self) -> &[Point] {
        &self.points
    }

    pub fn reference(&self) -> Point {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn absolute(&self) -> Vec<Point> {
        self.points.iter().map(|&p| p + self.reference).collect()
    }
}

/// Two coefficient branches, one per coordinate, around a shared reference.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianDescriptor {
    x: FourierDescriptor,
    y: FourierDescriptor,
    reference: Point,
}

impl CartesianDescriptor {
    pub fn new(x: FourierDescriptor, y: FourierDescriptor, reference: Point) -> Result<Self> {
        if x.branch() != Branch::CartesianX || y.branch() != Branch::CartesianY {
            return Err(Error::InvalidDescriptor(format!(
                "expected cartesian-x/cartesian-y branches, got {}/{}",
                x.branch(),
                y.branch()
            )));
        }
        if x.n_points() != y.n_points() || x.kept() != y.kept() || x.mode() != y.mode() {
            return Err(Error::InvalidDescriptor("x and y branches disagree on N, K or mode".into()));
        }
        if !reference.is_finite() {
            return Err(Error::InvalidDescriptor("reference is not finite".into()));
        }
        Ok(CartesianDescriptor { x, y, reference })
    }

    pub fn x(&self) -> &FourierDescriptor {
        &self.x
    }

    pub fn y(&self) -> &FourierDescriptor {
        &self.y
    }

    pub fn reference(&self) -> Point {
        self.reference
    }

    pub fn n_points(&self) -> usize {
        self.x.n_points()
    }

    pub fn kept(&self) -> usize {
        self.x.kept()
    }

    pub fn truncate(&self, kept: usize, mode: TruncationMode) -> Result<Self> {
        Self::new(self.x.truncate(kept, mode)?, self.y.truncate(kept, mode)?, self.reference)
    }

    /// x-branch parameters followed by y-branch parameters.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.x.parameters();
        p.extend(self.y.parameters());
        p
    }

    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        let half = self.x.parameter_count();
        if params.len() != 2 * half {
            return Err(Error::LengthMismatch { expected: 2 * half, actual: params.len() });
        }
        Self::new(
            self.x.with_parameters(&params[..half])?,
            self.y.with_parameters(&params[half..])?,
            self.reference,
        )
    }
}

/// Decoded rays, clamped below at [`EPSILON_RAY`].
pub fn decode_polar(desc: &FourierDescriptor, center: Point) -> Result<RadialContour> {
    if desc.branch() != Branch::Polar {
        return Err(Error::InvalidDescriptor(format!("expected a polar descriptor, got {}", desc.branch())));
    }
    let rays = desc.decode_real().into_iter().map(|r| r.max(EPSILON_RAY)).collect();
    RadialContour::new(center, rays)
}

pub fn decode_cartesian(desc: &CartesianDescriptor) -> Result<PointContour> {
    let xs = desc.x.decode_real();
    let ys = desc.y.decode_real();
    let points = xs.into_iter().zip(ys).map(|(x, y)| Point::new(x, y)).collect();
    PointContour::new(points, desc.reference)
}

pub fn encode_polar(rc: &RadialContour, kept: usize, mode: TruncationMode) -> Result<FourierDescriptor> {
    FourierDescriptor::full(dft(rc.rays()), Branch::Polar)?.truncate(kept, mode)
}

pub fn encode_cartesian(contour: &PointContour, kept: usize, mode: TruncationMode) -> Result<CartesianDescriptor> {
    let xs: Vec<f64> = contour.offsets().iter().map(|p| p.x).collect();
    let ys: Vec<f64> = contour.offsets().iter().map(|p| p.y).collect();
    CartesianDescriptor::new(
        FourierDescriptor::full(dft(&xs), Branch::CartesianX)?.truncate(kept, mode)?,
        FourierDescriptor::full(dft(&ys), Branch::CartesianY)?.truncate(kept, mode)?,
        contour.reference(),
    )
}

/// A polar or Cartesian encoding anchored at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeCode {
    Polar { descriptor: FourierDescriptor, center: Point },
    Cartesian(CartesianDescriptor),
}

impl ShapeCode {
    pub fn reference(&self) -> Point {
        match self {
            ShapeCode::Polar { center, .. } => *center,
            ShapeCode::Cartesian(c) => c.reference(),
        }
    }

    pub fn n_points(&self) -> usize {
        match self {
            ShapeCode::Polar { descriptor, .. } => descriptor.n_points(),
            ShapeCode::Cartesian(c) => c.n_points(),
        }
    }

    pub fn parameters(&self) -> Vec<f64> {
        match self {
            ShapeCode::Polar { descriptor, .. } => descriptor.parameters(),
            ShapeCode::Cartesian(c) => c.parameters(),
        }
    }

    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        Ok(match self {
            ShapeCode::Polar { descriptor, center } => {
                ShapeCode::Polar { descriptor: descriptor.with_parameters(params)?, center: *center }
            }
            ShapeCode::Cartesian(c) => ShapeCode::Cartesian(c.with_parameters(params)?),
        })
    }

    pub fn truncate(&self, kept: usize, mode: TruncationMode) -> Result<Self> {
        Ok(match self {
            ShapeCode::Polar { descriptor, center } => {
                ShapeCode::Polar { descriptor: descriptor.truncate(kept, mode)?, center: *center }
            }
            ShapeCode::Cartesian(c) => ShapeCode::Cartesian(c.truncate(kept, mode)?),
        })
    }

    /// Decoded contour points in absolute coordinates.
    pub fn decode_points(&self) -> Result<Vec<Point>> {
        match self {
            ShapeCode::Polar { descriptor, center } => Ok(decode_polar(descriptor, *center)?.endpoints()),
            ShapeCode::Cartesian(c) => Ok(decode_cartesian(c)?.absolute()),
        }
    }
}

/// One encoded instance in a descriptor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedShapeJson {
    pub id: u64,
    #[serde(default)]
    pub category: String,
    /// Ray center (polar) or coordinate reference (Cartesian).
    pub reference: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centerness: Option<f64>,
    /// One polar descriptor, or a cartesian-x and a cartesian-y descriptor.
    pub descriptors: Vec<DescriptorJson>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedShape {
    pub id: u64,
    pub category: String,
    pub centerness: Option<f64>,
    pub code: ShapeCode,
}

impl TryFrom<EncodedShapeJson> for EncodedShape {
    type Error = Error;

    fn try_from(raw: EncodedShapeJson) -> Result<Self> {
        if !raw.reference.is_finite() {
            return Err(Error::InvalidDescriptor(format!("shape {}: reference is not finite", raw.id)));
        }
        let mut descriptors = raw
            .descriptors
            .into_iter()
            .map(FourierDescriptor::try_from)
            .collect::<Result<Vec<_>>>()?;
        let code = match descriptors.len() {
            1 if descriptors[0].branch() == Branch::Polar => {
                ShapeCode::Polar { descriptor: descriptors.remove(0), center: raw.reference }
            }
            2 => {
                let y = descriptors.remove(1);
                let x = descriptors.remove(0);
                ShapeCode::Cartesian(CartesianDescriptor::new(x, y, raw.reference)?)
            }
            _ => {
                return Err(Error::InvalidDescriptor(format!(
                    "shape {}: expected one polar or two cartesian descriptors",
                    raw.id
                )))
            }
        };
        Ok(EncodedShape { id: raw.id, category: raw.category, centerness: raw.centerness, code })
    }
}

impl From<&EncodedShape> for EncodedShapeJson {
    fn from(s: &EncodedShape) -> Self {
        let descriptors = match &s.code {
            ShapeCode::Polar { descriptor, .. } => vec![descriptor.to_json()],
            ShapeCode::Cartesian(c) => vec![c.x().to_json(), c.y().to_json()],
        };
        EncodedShapeJson {
            id: s.id,
            category: s.category.clone(),
            reference: s.code.reference(),
            centerness: s.centerness,
            descriptors,
        }
    }
}

/// Descriptor file: `{"shapes": [...]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShapeFileJson {
    pub shapes: Vec<EncodedShapeJson>,
}

pub fn parse_shape_file(s: &str) -> Result<Vec<EncodedShape>> {
    let raw: ShapeFileJson = serde_json::from_str(s)?;
    raw.shapes.into_iter().map(EncodedShape::try_from).collect()
}

pub fn shape_file_to_string(shapes: &[EncodedShape]) -> String {
    let raw = ShapeFileJson { shapes: shapes.iter().map(EncodedShapeJson::from).collect() };
    serde_json::to_string_pretty(&raw).expect("shape file serializes")
}

pub fn read_shape_file(path: &Path) -> Result<Vec<EncodedShape>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_shape_file(&text)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    /// O(N^2) inverse, written from the definition.
    fn idft_oracle(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|t| {
                let s: Complex64 = (0..n)
                    .map(|k| x[k] * Complex64::from_polar(1.0, TAU * (k * t) as f64 / n as f64))
                    .sum();
                s / n as f64
            })
            .collect()
    }

    #[test]
    fn idft_basis_cases() {
        let out = idft(&[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(out.iter().all(|&v| close(v, c(1.0, 0.0), 1e-15)));
        let out = idft(&[c(0.0, 0.0), c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let expected = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (a, b) in out.iter().zip(expected) {
            assert!(close(*a, b, 1e-15), "{a} vs {b}");
        }
        let spectrum = dft(&[2.0, 3.0, 4.0, 3.0]);
        let back = idft(&spectrum);
        for (a, b) in back.iter().zip([2.0, 3.0, 4.0, 3.0]) {
            assert!(close(*a, c(b, 0.0), 1e-12));
        }
        let oracle = idft_oracle(&spectrum);
        for (a, b) in back.iter().zip(&oracle) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn dft_of_constant_and_symmetry() {
        let x = dft(&[2.5; 9]);
        assert!(close(x[0], c(22.5, 0.0), 1e-12));
        assert!(x[1..].iter().all(|&v| v.norm() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Vec<f64> = (0..90).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = dft(&p);
        for k in 1..90 {
            assert!(close(x[90 - k], x[k].conj(), 1e-12));
        }
    }

    #[test]
    fn truncation_modes() {
        let p: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() + 3.0).collect();
        let full = FourierDescriptor::full(dft(&p), Branch::Polar).unwrap();
        assert_eq!(full.truncate(12, TruncationMode::OneSided).unwrap().coefficients(), full.coefficients());
        let sym = full.truncate(3, TruncationMode::Symmetric).unwrap();
        let nonzero: Vec<usize> = (0..12).filter(|&k| sym.coefficients()[k] != Complex64::default()).collect();
        assert_eq!(nonzero, vec![0, 1, 2, 10, 11]);
        let imag = idft(sym.coefficients());
        assert!(imag.iter().all(|v| v.im.abs() < 1e-12));
        let one = full.truncate(3, TruncationMode::OneSided).unwrap();
        let nonzero: Vec<usize> = (0..12).filter(|&k| one.coefficients()[k] != Complex64::default()).collect();
        assert_eq!(nonzero, vec![0, 1, 2]);

        let mean = p.iter().sum::<f64>() / 12.0;
        for mode in [TruncationMode::OneSided, TruncationMode::Symmetric] {
            let dc = full.truncate(1, mode).unwrap().decode_real();
            assert!(dc.iter().all(|v| (v - mean).abs() < 1e-12));
        }

        assert!(full.truncate(0, TruncationMode::OneSided).is_err());
        assert!(full.truncate(13, TruncationMode::OneSided).is_err());
        assert!(full.truncate(7, TruncationMode::Symmetric).is_ok());
        assert!(matches!(
            full.truncate(8, TruncationMode::Symmetric),
            Err(Error::TruncationOutOfRange { kept: 8, max: 7, .. })
        ));
    }

    #[test]
    fn descriptor_rejects_nonzero_truncated_entries() {
        let coeffs = vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        assert!(FourierDescriptor::new(coeffs.clone(), 1, Branch::Polar, TruncationMode::OneSided).is_err());
        assert!(FourierDescriptor::new(coeffs, 3, Branch::Polar, TruncationMode::OneSided).is_ok());
    }

    #[test]
    fn polar_decoding() {
        let n = 16;
        let mut x = vec![Complex64::default(); n];
        x[0] = c(n as f64 * 4.0, 0.0);
        let d = FourierDescriptor::new(x, 1, Branch::Polar, TruncationMode::Symmetric).unwrap();
        let rc = decode_polar(&d, Point::ORIGIN).unwrap();
        assert!(rc.rays().iter().all(|r| (r - 4.0).abs() < 1e-12));

        // DC 1 with a strong first harmonic dips below zero at n = N/2.
        let mut x = vec![Complex64::default(); n];
        x[0] = c(n as f64, 0.0);
        x[1] = c(n as f64, 0.0);
        x[n - 1] = c(n as f64, 0.0);
        let d = FourierDescriptor::new(x, 2, Branch::Polar, TruncationMode::Symmetric).unwrap();
        let rc = decode_polar(&d, Point::ORIGIN).unwrap();
        assert_eq!(rc.rays()[n / 2], EPSILON_RAY);
        assert!((rc.rays()[0] - 3.0).abs() < 1e-12);

        let cart = d.clone().with_branch(Branch::CartesianX);
        assert!(decode_polar(&cart, Point::ORIGIN).is_err());
    }

    #[test]
    fn polar_round_trip_and_star() {
        let rays: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 5.0 } else { 2.0 }).collect();
        let rc = RadialContour::new(Point::new(3.0, 4.0), rays.clone()).unwrap();
        for (kept, mode) in [(10, TruncationMode::OneSided), (6, TruncationMode::Symmetric)] {
            let d = encode_polar(&rc, kept, mode).unwrap();
            let back = decode_polar(&d, rc.center()).unwrap();
            for (a, b) in back.rays().iter().zip(&rays) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        let flat = encode_polar(&RadialContour::new(Point::ORIGIN, vec![7.0; 8]).unwrap(), 5, TruncationMode::Symmetric).unwrap();
        assert!(close(flat.coefficients()[0], c(56.0, 0.0), 1e-12));
        assert!(flat.coefficients()[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn cartesian_decoding() {
        let n = 24;
        let (a, b) = (2.0, -3.0);
        let mut x = vec![Complex64::default(); n];
        let mut y = vec![Complex64::default(); n];
        x[0] = c(n as f64 * a, 0.0);
        y[0] = c(n as f64 * b, 0.0);
        let desc = CartesianDescriptor::new(
            FourierDescriptor::new(x, 1, Branch::CartesianX, TruncationMode::Symmetric).unwrap(),
            FourierDescriptor::new(y, 1, Branch::CartesianY, TruncationMode::Symmetric).unwrap(),
            Point::new(10.0, 10.0),
        )
        .unwrap();
        let pc = decode_cartesian(&desc).unwrap();
        assert!(pc.absolute().iter().all(|p| p.distance(Point::new(12.0, 7.0)) < 1e-12));

        let r = 5.0;
        let circle: Vec<Point> = (0..n).map(|i| Point::from_angle(TAU * i as f64 / n as f64) * r).collect();
        let contour = PointContour::new(circle.clone(), Point::ORIGIN).unwrap();
        let desc = encode_cartesian(&contour, n, TruncationMode::OneSided).unwrap();
        let back = decode_cartesian(&desc).unwrap();
        for (p, q) in back.offsets().iter().zip(&circle) {
            assert!(p.distance(*q) < 1e-9);
        }
    }

    #[test]
    fn ellipse_is_first_harmonic() {
        let n = 40;
        let (rx, ry, rot) = (7.0, 3.0, 0.4_f64);
        let sample = |i: usize| {
            let t = TAU * i as f64 / n as f64;
            let (u, v) = (rx * t.cos(), ry * t.sin());
            Point::new(u * rot.cos() - v * rot.sin(), u * rot.sin() + v * rot.cos())
        };
        let pts: Vec<Point> = (0..n).map(sample).collect();
        let contour = PointContour::new(pts, Point::ORIGIN).unwrap();
        let desc = encode_cartesian(&contour, 2, TruncationMode::Symmetric).unwrap();
        let back = decode_cartesian(&desc).unwrap();
        for (i, p) in back.offsets().iter().enumerate() {
            assert!(p.distance(sample(i)) < 1e-9);
        }
    }

    #[test]
    fn cartesian_branch_validation() {
        let x = FourierDescriptor::full(dft(&[1.0, 2.0, 3.0, 4.0]), Branch::CartesianX).unwrap();
        let y = x.clone().with_branch(Branch::CartesianY);
        assert!(CartesianDescriptor::new(x.clone(), x.clone(), Point::ORIGIN).is_err());
        let y3 = y.truncate(2, TruncationMode::Symmetric).unwrap();
        assert!(CartesianDescriptor::new(x.clone(), y3, Point::ORIGIN).is_err());
        assert!(CartesianDescriptor::new(x, y, Point::ORIGIN).is_ok());
    }

    #[test]
    fn parameters_round_trip_in_symmetric_mode() {
        let p: Vec<f64> = (0..11).map(|i| 4.0 + (i as f64).cos()).collect();
        let d = FourierDescriptor::full(dft(&p), Branch::Polar).unwrap().truncate(4, TruncationMode::Symmetric).unwrap();
        let params = d.parameters();
        assert_eq!(params.len(), 8);
        let rebuilt = d.with_parameters(&params).unwrap();
        for (a, b) in rebuilt.coefficients().iter().zip(d.coefficients()) {
            assert!(close(*a, *b, 1e-12));
        }
        assert!(d.with_parameters(&params[..7]).is_err());
    }

    #[test]
    fn backpropagate_matches_explicit_jacobian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, kept, mode) in [(12, 4, TruncationMode::OneSided), (12, 7, TruncationMode::Symmetric), (9, 5, TruncationMode::Symmetric)] {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..2.0)).collect();
            let d = FourierDescriptor::full(dft(&p), Branch::Polar).unwrap().truncate(kept, mode).unwrap();
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let analytic = d.backpropagate(&g).unwrap();
            // Column j of the Jacobian: decode of the j-th unit parameter vector.
            let zeros = vec![0.0; d.parameter_count()];
            let base = d.with_parameters(&zeros).unwrap();
            for (j, a) in analytic.iter().enumerate() {
                let mut e = zeros.clone();
                e[j] = 1.0;
                let col = base.with_parameters(&e).unwrap().decode_real();
                let expected: f64 = col.iter().zip(&g).map(|(c, g)| c * g).sum();
                assert!((a - expected).abs() < 1e-12, "n={n} kept={kept} j={j}: {a} vs {expected}");
            }
        }
    }

    #[test]
    fn descriptor_json() {
        let d = FourierDescriptor::full(dft(&[1.0, 5.0, 2.0, 7.0, 3.0]), Branch::Polar)
            .unwrap()
            .truncate(2, TruncationMode::Symmetric)
            .unwrap();
        let s = d.to_json_string();
        assert!(s.contains("\"branch\":\"polar\"") && s.contains("\"mode\":\"symmetric\""));
        let back = FourierDescriptor::from_json_str(&s).unwrap();
        for (a, b) in back.coefficients().iter().zip(d.coefficients()) {
            assert!(close(*a, *b, 1e-12));
        }
        assert_eq!(back.kept(), 2);
        let bad = s.replace("\"n_points\":5", "\"n_points\":6");
        assert!(FourierDescriptor::from_json_str(&bad).is_err());
    }

    #[test]
    fn shape_file_round_trip() {
        let rc = RadialContour::new(Point::new(1.0, 1.0), vec![2.0, 3.0, 2.0, 3.0, 2.5]).unwrap();
        let shape = EncodedShape {
            id: 4,
            category: "cat".into(),
            centerness: Some(0.8),
            code: ShapeCode::Polar { descriptor: encode_polar(&rc, 3, TruncationMode::Symmetric).unwrap(), center: rc.center() },
        };
        let text = shape_file_to_string(std::slice::from_ref(&shape));
        let back = parse_shape_file(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].id, 4);
        assert_eq!(back[0].code.reference(), Point::new(1.0, 1.0));
        assert!(parse_shape_file("{\"shapes\":[{\"id\":1,\"reference\":[0,0],\"descriptors\":[]}]}").is_err());
    }
}
