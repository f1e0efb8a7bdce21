//! Compact contour representation for instance masks.
//!
//! A closed contour is sampled either as `N` ray lengths around a center
//! (polar) or as `N` boundary points (Cartesian), transformed with a DFT and
//! truncated to its lowest-frequency coefficients. Decoding is the inverse
//! DFT
//!
//! ```text
//! p_n = (1/N) * sum_{k=0}^{N-1} x_k * exp(j*2*pi*k*n/N)
//! ```
//!
//! with the discarded high-frequency entries padded with zeros. The decoder
//! is linear, so contour losses (Chamfer distance, polar IoU) have closed-form
//! gradients with respect to the kept coefficients; [`losses`] computes them
//! and [`gradcheck`] verifies them against central finite differences.
//!
//! Coordinates follow the image convention (y grows downward). None of the
//! math depends on it: angles are measured from the +x axis towards +y, which
//! is counterclockwise in a y-up frame.

pub mod bench;
pub mod centerness;
pub mod codec;
pub mod corpus;
pub mod error;
pub mod evalcurve;
pub mod fft;
pub mod geometry;
pub mod gradcheck;
pub mod losses;
pub mod radial;

pub use error::{Error, Result};
pub use geometry::{BoundingBox, Point, Polygon};

/// Lower bound for ray lengths. Rays with no boundary intersection get this
/// length, and decoded rays are clamped to it.
pub const EPSILON_RAY: f64 = 1e-6;

/// Default contour point count.
pub const DEFAULT_POINTS: usize = 90;

/// Default number of kept complex coefficients.
pub const DEFAULT_COEFFS: usize = 36;

/// Default rasterization resolution (pixels per side) for IoU and mask statistics.
pub const DEFAULT_RESOLUTION: usize = 512;

/// Default Gaussian centerness decay factor.
pub const DEFAULT_ALPHA: f64 = 10.0;
