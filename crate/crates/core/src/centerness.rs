//! Centerness scores: how close a candidate point is to the middle of an
//! instance.
//!
//! * polar centerness `sqrt(min ray / max ray)`;
//! * normalized centerness, polar centerness relative to the value at the
//!   instance's center of mass, clamped to 1;
//! * Gaussian centerness, a separable Gaussian of the offset from the mask
//!   mean scaled by the mask standard deviations.

use serde::{Deserialize, Serialize};

use crate::geometry::{rasterize, Grid, Point, Polygon};
use crate::radial::extract_radial;
use crate::{Error, Result, EPSILON_RAY};

/// Mean and standard deviation of a mask's pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskStats {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl MaskStats {
    pub fn new(mu_x: f64, mu_y: f64, sigma_x: f64, sigma_y: f64) -> Result<Self> {
        if !(mu_x.is_finite() && mu_y.is_finite()) {
            return Err(Error::InvalidArgument("mask mean is not finite".into()));
        }
        if !(sigma_x > 0.0 && sigma_y > 0.0 && sigma_x.is_finite() && sigma_y.is_finite()) {
            return Err(Error::Degenerate(format!(
                "mask standard deviations must be positive, got ({sigma_x}, {sigma_y})"
            )));
        }
        Ok(MaskStats { mu_x, mu_y, sigma_x, sigma_y })
    }

    pub fn mean(&self) -> Point {
        Point::new(self.mu_x, self.mu_y)
    }
}

pub fn polar_centerness(rays: &[f64]) -> Result<f64> {
    if rays.is_empty() {
        return Err(Error::InvalidArgument("no rays".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for &r in rays {
        if !(r >= EPSILON_RAY && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("ray length {r} below {EPSILON_RAY:e}")));
        }
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo / hi).sqrt())
}

pub fn normalized_centerness(pc_i: f64, pc_max: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pc_i) {
        return Err(Error::InvalidArgument(format!("polar centerness {pc_i} outside [0, 1]")));
    }
    if !(pc_max > 0.0 && pc_max <= 1.0) {
        return Err(Error::Degenerate(format!("reference centerness {pc_max} outside (0, 1]")));
    }
    Ok((pc_i / pc_max).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCenterness {
    pub value: f64,
    pub polar: f64,
    pub reference: f64,
    /// The centroid is outside the polygon, so the reference value was
    /// computed from epsilon rays.
    pub centroid_outside: bool,
}

/// Normalized centerness of `point`, with the reference polar centerness
/// taken at the polygon's centroid. Both use `n_rays` rays.
pub fn normalized_centerness_at(poly: &Polygon, point: Point, n_rays: usize) -> Result<NormalizedCenterness> {
    let at_point = extract_radial(poly, point, n_rays)?;
    let at_centroid = extract_radial(poly, poly.centroid(), n_rays)?;
    let polar = polar_centerness(at_point.contour.rays())?;
    let reference = polar_centerness(at_centroid.contour.rays())?;
    Ok(NormalizedCenterness {
        value: normalized_centerness(polar, reference)?,
        polar,
        reference,
        centroid_outside: at_centroid.center_outside,
    })
}

pub fn gaussian_centerness(m: f64, n: f64, stats: &MaskStats, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("decay factor must be positive, got {alpha}")));
    }
    let zx = (m - stats.mu_x) / stats.sigma_x;
    let zy = (n - stats.mu_y) / stats.sigma_y;
    Ok((-alpha * zx * zx).exp() * (-alpha * zy * zy).exp())
}

/// Additive centerness factor applied after scoring. The sum may exceed 1.
pub fn with_factor(centerness: f64, factor: f64) -> f64 {
    centerness + factor
}

/// Pixel-coordinate statistics of `poly` rasterized at `resolution` pixels
/// per side of its bounding box. Standard deviations are population values.
pub fn mask_stats(poly: &Polygon, resolution: usize) -> Result<MaskStats> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let raster = rasterize(poly, Grid::covering(&poly.bounding_box(), resolution));
    let count = raster.count();
    if count == 0 {
        return Err(Error::EmptyRaster);
    }
    let n = count as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for p in raster.centers() {
        sx += p.x;
        sy += p.y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut vx, mut vy) = (0.0, 0.0);
    for p in raster.centers() {
        vx += (p.x - mx) * (p.x - mx);
        vy += (p.y - my) * (p.y - my);
    }
    MaskStats::new(mx, my, (vx / n).sqrt(), (vy / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_cases() {
        assert_eq!(polar_centerness(&[3.0; 8]).unwrap(), 1.0);
        assert_eq!(polar_centerness(&[1.0, 1.0, 4.0, 4.0]).unwrap(), 0.5);
        let v = polar_centerness(&[EPSILON_RAY, 0.5, 1.0, 0.7]).unwrap();
        assert!((v - 1e-3).abs() < 1e-12);
        assert!(polar_centerness(&[]).is_err());
        assert!(polar_centerness(&[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn normalized_cases() {
        assert_eq!(normalized_centerness(0.6, 0.6).unwrap(), 1.0);
        assert!((normalized_centerness(0.3, 0.6).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(normalized_centerness(0.8, 0.6).unwrap(), 1.0);
        assert!(matches!(normalized_centerness(0.5, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn normalized_at_centroid_is_one() {
        let rect = Polygon::from_coords(&[(0.0, 0.0), (40.0, 0.0), (40.0, 10.0), (0.0, 10.0)]).unwrap();
        let nc = normalized_centerness_at(&rect, rect.centroid(), 36).unwrap();
        assert_eq!(nc.value, 1.0);
        assert!(!nc.centroid_outside);
        let off = normalized_centerness_at(&rect, Point::new(5.0, 5.0), 36).unwrap();
        assert!(off.value < 1.0 && off.value > 0.0);
    }

    #[test]
    fn gaussian_cases() {
        let stats = MaskStats::new(10.0, 20.0, 4.0, 2.0).unwrap();
        assert_eq!(gaussian_centerness(10.0, 20.0, &stats, 10.0).unwrap(), 1.0);
        let v = gaussian_centerness(14.0, 20.0, &stats, 10.0).unwrap();
        assert!(((v - (-10.0f64).exp()) / (-10.0f64).exp()).abs() < 1e-12);
        let joint = gaussian_centerness(12.0, 21.0, &stats, 10.0).unwrap();
        let split = gaussian_centerness(12.0, 20.0, &stats, 10.0).unwrap() * gaussian_centerness(10.0, 21.0, &stats, 10.0).unwrap();
        assert!((joint - split).abs() < 1e-15);
        assert!(gaussian_centerness(0.0, 0.0, &stats, 0.0).is_err());
        assert!(MaskStats::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn factor_offsets() {
        assert_eq!(with_factor(0.5, 0.0), 0.5);
        assert_eq!(with_factor(0.9, 0.2), 1.1);
    }

    #[test]
    fn square_stats_match_enumeration() {
        let s = 8.0;
        let res = 64;
        let sq = Polygon::from_coords(&[(2.0, 3.0), (2.0 + s, 3.0), (2.0 + s, 3.0 + s), (2.0, 3.0 + s)]).unwrap();
        let stats = mask_stats(&sq, res).unwrap();
        // Every pixel center is inside; enumerate them directly.
        let d = s / res as f64;
        let centers: Vec<f64> = (0..res).map(|i| (i as f64 + 0.5) * d).collect();
        let mean = centers.iter().sum::<f64>() / res as f64;
        let var = centers.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / res as f64;
        assert!((stats.mu_x - (2.0 + s / 2.0)).abs() < 1e-12);
        assert!((stats.mu_y - (3.0 + s / 2.0)).abs() < 1e-12);
        assert!((stats.sigma_x - var.sqrt()).abs() < 1e-12);
        assert!((stats.sigma_y - stats.sigma_x).abs() < 1e-12);

        let moved = mask_stats(&sq.translate(Point::new(5.0, -1.0)), res).unwrap();
        assert!((moved.mu_x - stats.mu_x - 5.0).abs() < 1e-9);
        assert!((moved.mu_y - stats.mu_y + 1.0).abs() < 1e-9);
        assert!((moved.sigma_x - stats.sigma_x).abs() < 1e-9);
    }
}
