//! Polar sampling of a contour: `N` ray lengths from a center at uniform
//! angular spacing `2*pi/N`, ray `n` pointing at angle `n * 2*pi/N` from +x.

use std::f64::consts::TAU;

use crate::geometry::{Point, Polygon};
use crate::{Error, Result, EPSILON_RAY};

pub const MIN_RAYS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialContour {
    center: Point,
    rays: Vec<f64>,
}

impl RadialContour {
    pub fn new(center: Point, rays: Vec<f64>) -> Result<Self> {
        if rays.len() < MIN_RAYS {
            return Err(Error::InvalidRadialContour(format!(
                "need at least {MIN_RAYS} rays, got {}",
                rays.len()
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidRadialContour("center is not finite".into()));
        }
        if let Some(i) = rays.iter().position(|r| !(r.is_finite() && *r >= EPSILON_RAY)) {
            return Err(Error::InvalidRadialContour(format!(
                "ray {i} has length {} below {EPSILON_RAY:e}",
                rays[i]
            )));
        }
        Ok(RadialContour { center, rays })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn rays(&self) -> &[f64] {
        &self.rays
    }

    pub fn n_rays(&self) -> usize {
        self.rays.len()
    }

    pub fn angle_step(&self) -> f64 {
        TAU / self.rays.len() as f64
    }

    pub fn angle(&self, n: usize) -> f64 {
        ray_angle(n, self.rays.len())
    }

    /// Endpoint of ray `n`.
    pub fn vertex(&self, n: usize) -> Point {
        self.center + Point::from_angle(self.angle(n)) * self.rays[n]
    }

    pub fn endpoints(&self) -> Vec<Point> {
        (0..self.rays.len()).map(|n| self.vertex(n)).collect()
    }

    pub fn to_polygon(&self) -> Result<Polygon> {
        radial_to_polygon(self)
    }
}

pub fn ray_angle(n: usize, n_rays: usize) -> f64 {
    TAU * n as f64 / n_rays as f64
}

/// Result of sampling a polygon from a center.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialExtraction {
    pub contour: RadialContour,
    /// The center is not inside the polygon (e.g. centroid of a crescent).
    pub center_outside: bool,
    /// Rays that hit nothing and were assigned [`EPSILON_RAY`].
    pub missed_rays: usize,
}

/// Casts `n_rays` rays from `center`; each ray takes its farthest boundary
/// hit, or [`EPSILON_RAY`] when it misses.
pub fn extract_radial(poly: &Polygon, center: Point, n_rays: usize) -> Result<RadialExtraction> {
    if n_rays < MIN_RAYS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_RAYS} rays, got {n_rays}"
        )));
    }
    let mut missed_rays = 0;
    let rays = (0..n_rays)
        .map(|n| {
            match poly.ray_intersections(center, ray_angle(n, n_rays)).last() {
                Some(&t) => t.max(EPSILON_RAY),
                None => {
                    missed_rays += 1;
                    EPSILON_RAY
                }
            }
        })
        .collect();
    Ok(RadialExtraction {
        contour: RadialContour::new(center, rays)?,
        center_outside: !poly.contains(center),
        missed_rays,
    })
}

/// [`extract_radial`] from the polygon's area centroid.
pub fn extract_at_centroid(poly: &Polygon, n_rays: usize) -> Result<RadialExtraction> {
    extract_radial(poly, poly.centroid(), n_rays)
}

/// Polygon through the ray endpoints, in angular order.
pub fn radial_to_polygon(rc: &RadialContour) -> Result<Polygon> {
    Polygon::new(rc.endpoints())
}
