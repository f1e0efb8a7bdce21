//! Central finite-difference verification of analytic gradients.

use std::fmt::Display;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{Branch, CartesianDescriptor, FourierDescriptor, Representation, ShapeCode, TruncationMode};
use crate::corpus::{generate, ShapeSpec, SizeRange};
use crate::geometry::{Point, Polygon};
use crate::losses::{assignment_margin, chamfer_assignment, chamfer_point_sets, loss_through_decoder, LossConfig, LossKind};
use crate::radial::extract_radial;
use crate::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Chamfer checks are skipped when a nearest-neighbor assignment is closer
/// than this (in squared pixels) to switching.
pub const TIE_MARGIN: f64 = 1e-6;

/// Denominator floor for relative errors.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradReport {
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub passed: bool,
}

/// Compares `analytic` with `(f(x + h e_i) - f(x - h e_i)) / 2h` for every
/// parameter. The relative error of entry `i` is
/// `|a_i - n_i| / max(|a_i|, |n_i|, REL_FLOOR)`; the check passes when the largest
/// relative error is at most `tol`.
pub fn check_gradient<F, E>(mut f: F, analytic: &[f64], at: &[f64], step: f64, tol: f64) -> Result<GradReport>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, E>,
    E: Display,
{
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    if analytic.len() != at.len() {
        return Err(Error::LengthMismatch { expected: at.len(), actual: analytic.len() });
    }
    let mut x = at.to_vec();
    let mut report = GradReport { max_abs_error: 0.0, max_rel_error: 0.0, worst_index: 0, passed: true };
    for i in 0..x.len() {
        let orig = x[i];
        let (hi, lo) = (orig + step, orig - step);
        x[i] = hi;
        let plus = f(&x).map_err(|e| Error::GradCheck(e.to_string()))?;
        x[i] = lo;
        let minus = f(&x).map_err(|e| Error::GradCheck(e.to_string()))?;
        x[i] = orig;
        // The realized step, not 2h: `orig +- step` is rounded.
        let numeric = (plus - minus) / (hi - lo);
        let abs = (analytic[i] - numeric).abs();
        let rel = abs / analytic[i].abs().max(numeric.abs()).max(REL_FLOOR);
        if !rel.is_finite() {
            return Err(Error::GradCheck(format!("non-finite error at parameter {i}")));
        }
        report.max_abs_error = report.max_abs_error.max(abs);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    report.passed = report.max_rel_error <= tol;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderCheck {
    pub n_points: usize,
    pub kept: usize,
    pub mode: TruncationMode,
    pub representation: Representation,
    pub loss: LossKind,
    pub step: f64,
    pub tol: f64,
}

impl DecoderCheck {
    pub fn new(n_points: usize, kept: usize, mode: TruncationMode, representation: Representation, loss: LossKind) -> Self {
        DecoderCheck { n_points, kept, mode, representation, loss, step: DEFAULT_STEP, tol: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub report: GradReport,
    /// Not counted: the finite-difference stencil crosses a kink of the loss.
    pub skipped: bool,
}

/// Random target polygon and random code for one seed. Coefficients are
/// drawn so decoded rays stay well above the clamp.
pub fn random_case(seed: u64, check: &DecoderCheck) -> Result<(ShapeCode, Polygon)> {
    let n = check.n_points;
    check.mode.check(check.kept, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ShapeSpec::RandomStarShaped { radius: SizeRange::new(20.0, 40.0)?, vertices: 14, spikiness: 0.4 };
    let offset = Point::new(rng.gen_range(50.0..150.0), rng.gen_range(50.0..150.0));
    let target = generate(&spec, 1, rng.gen())?.remove(0).translate(offset);
    let center = target.centroid() + Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));

    let branch = |branch: Branch, dc: f64, spread: f64, rng: &mut ChaCha8Rng| {
        let mut coeffs = vec![Complex64::default(); n];
        coeffs[0] = Complex64::new(n as f64 * dc, 0.0);
        let per = spread / check.kept.saturating_sub(1).max(1) as f64;
        for c in coeffs.iter_mut().take(check.kept).skip(1) {
            *c = Complex64::from_polar(n as f64 * per * rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        }
        let d = FourierDescriptor::new(coeffs, check.kept, branch, TruncationMode::OneSided)?;
        // Rebuild through the parameters so symmetric partners are conjugates.
        let params = d.parameters();
        FourierDescriptor::new(vec![Complex64::default(); n], check.kept, branch, check.mode)?.with_parameters(&params)
    };

    let code = match check.representation {
        Representation::Polar => {
            // Mean ray near the target's, so the prediction crosses the target
            // boundary. A prediction wholly outside (or inside) the target
            // makes the polar IoU loss depend on the DC term alone, and every
            // other gradient entry is exactly zero.
            let target_rays = extract_radial(&target, center, n)?.contour;
            let mean = target_rays.rays().iter().sum::<f64>() / n as f64;
            let r0 = mean * rng.gen_range(0.9..1.1);
            // Harmonics sum to at most 0.25 * r0, so rays stay >= 0.75 * r0.
            ShapeCode::Polar { descriptor: branch(Branch::Polar, r0, 0.25 * r0, &mut rng)?, center }
        }
        Representation::Cartesian => {
            let x = branch(Branch::CartesianX, rng.gen_range(-3.0..3.0), 20.0, &mut rng)?;
            let y = branch(Branch::CartesianY, rng.gen_range(-3.0..3.0), 20.0, &mut rng)?;
            ShapeCode::Cartesian(CartesianDescriptor::new(x, y, center)?)
        }
    };
    Ok((code, target))
}

pub fn check_decoder_seed(seed: u64, check: &DecoderCheck) -> Result<SeedReport> {
    let (code, target) = random_case(seed, check)?;
    check_decoder_at(seed, &code, &target, check)
}

/// Checks the gradient of `loss_through_decoder` at `code`.
pub fn check_decoder_at(seed: u64, code: &ShapeCode, target: &Polygon, check: &DecoderCheck) -> Result<SeedReport> {
    let config = LossConfig::new(check.loss);
    let at = code.parameters();
    let analytic = loss_through_decoder(code, target, &config)?.grad;
    let report = check_gradient(
        |p| code.with_parameters(p).and_then(|c| loss_through_decoder(&c, target, &config)).map(|r| r.value),
        &analytic,
        &at,
        check.step,
        check.tol,
    )?;
    let skipped = match check.loss {
        LossKind::Chamfer => !chamfer_smooth_around(code, target, check.step)?,
        LossKind::PolarIou => !polar_iou_smooth_around(code, target, check.step)?,
    };
    Ok(SeedReport { seed, report, skipped })
}

/// Whether the central-difference stencil around `code` stays on one
/// smooth piece of the Chamfer distance: no assignment is within
/// [`TIE_MARGIN`] of a tie, and no assignment switches at `x +- h e_i`.
fn chamfer_smooth_around(code: &ShapeCode, target: &Polygon, step: f64) -> Result<bool> {
    let (pred, target_pts) = chamfer_point_sets(code, target)?;
    if assignment_margin(&pred, &target_pts) < TIE_MARGIN {
        return Ok(false);
    }
    let base = chamfer_assignment(&pred, &target_pts);
    let mut x = code.parameters();
    for i in 0..x.len() {
        let orig = x[i];
        for shifted in [orig + step, orig - step] {
            x[i] = shifted;
            let (pred, _) = chamfer_point_sets(&code.with_parameters(&x)?, target)?;
            if chamfer_assignment(&pred, &target_pts) != base {
                return Ok(false);
            }
        }
        x[i] = orig;
    }
    Ok(true)
}

/// Same as [`chamfer_smooth_around`] for the polar IoU kinks: no decoded ray
/// may cross its target ray (or the clamp) inside the stencil.
fn polar_iou_smooth_around(code: &ShapeCode, target: &Polygon, step: f64) -> Result<bool> {
    let ShapeCode::Polar { descriptor, center } = code else {
        return Ok(true);
    };
    let target_rays = extract_radial(target, *center, descriptor.n_points())?.contour;
    let pattern = |rays: Vec<f64>| -> Vec<(bool, bool)> {
        rays.iter().zip(target_rays.rays()).map(|(&r, &t)| (r > t, r < crate::EPSILON_RAY)).collect()
    };
    let base = pattern(descriptor.decode_real());
    let mut x = descriptor.parameters();
    for i in 0..x.len() {
        let orig = x[i];
        for shifted in [orig + step, orig - step] {
            x[i] = shifted;
            if pattern(descriptor.with_parameters(&x)?.decode_real()) != base {
                return Ok(false);
            }
        }
        x[i] = orig;
    }
    Ok(true)
}

/// Runs `seeds` independent checks in parallel; reports come back in seed order.
pub fn run_decoder_checks(seeds: &[u64], check: &DecoderCheck) -> Result<Vec<SeedReport>> {
    seeds.par_iter().map(|&s| check_decoder_seed(s, check)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSummary {
    pub runs: usize,
    pub skipped: usize,
    pub failed: usize,
    pub max_rel_error: f64,
}

impl CheckSummary {
    pub fn from_reports(reports: &[SeedReport]) -> Self {
        let counted = reports.iter().filter(|r| !r.skipped);
        CheckSummary {
            runs: reports.len(),
            skipped: reports.iter().filter(|r| r.skipped).count(),
            failed: counted.clone().filter(|r| !r.report.passed).count(),
            max_rel_error: counted.map(|r| r.report.max_rel_error).fold(0.0, f64::max),
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.skipped < self.runs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let x = [0.3, -1.2, 4.0, 2.5];
        let grad: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = check_gradient(|p| Ok::<_, Error>(p.iter().map(|v| v * v).sum()), &grad, &x, 1e-5, 1e-4).unwrap();
        assert!(r.max_abs_error <= 1e-9 && r.max_rel_error <= 1e-9 && r.passed, "{r:?}");
    }

    #[test]
    fn affine_is_exact_at_any_step() {
        let w = [1.5, -2.0, 0.25];
        let x = [1.0, 2.0, -3.0];
        // Roundoff in f is about 1e-15 here, divided by 2h in the quotient;
        // steps below 1e-4 cannot hold the bound for any implementation.
        for step in [1e-4, 1e-3, 0.5, 10.0] {
            let r = check_gradient(|p| Ok::<_, Error>(3.0 + p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()), &w, &x, step, 1e-4).unwrap();
            assert!(r.max_abs_error <= 1e-10 && r.passed, "step {step}: {r:?}");
        }
    }

    #[test]
    fn corrupted_gradient_fails() {
        let x = [1.0, 2.0, 3.0];
        let mut grad: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        grad[1] *= 2.0;
        let r = check_gradient(|p| Ok::<_, Error>(p.iter().map(|v| v * v).sum()), &grad, &x, 1e-5, 1e-4).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn evaluation_failure_is_an_error() {
        let r = check_gradient(|_| Err::<f64, _>("boom"), &[1.0], &[0.0], 1e-5, 1e-4);
        assert!(matches!(r, Err(Error::GradCheck(_))));
        assert!(check_gradient(|_| Ok::<_, Error>(0.0), &[1.0], &[0.0], 0.0, 1e-4).is_err());
    }

    #[test]
    fn random_cases_are_deterministic_and_unclamped() {
        let check = DecoderCheck::new(32, 8, TruncationMode::Symmetric, Representation::Polar, LossKind::Chamfer);
        let (a, ta) = random_case(5, &check).unwrap();
        let (b, tb) = random_case(5, &check).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        if let ShapeCode::Polar { descriptor, .. } = &a {
            assert!(descriptor.decode_real().iter().all(|&r| r > 5.0));
        }
        let r1 = check_decoder_seed(5, &check).unwrap();
        let r2 = check_decoder_seed(5, &check).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn decoder_gradients_pass_on_a_few_seeds() {
        for rep in [Representation::Polar, Representation::Cartesian] {
            for mode in [TruncationMode::Symmetric, TruncationMode::OneSided] {
                for loss in [LossKind::Chamfer, LossKind::PolarIou] {
                    if rep == Representation::Cartesian && loss == LossKind::PolarIou {
                        continue;
                    }
                    let check = DecoderCheck::new(32, 8, mode, rep, loss);
                    for seed in 0..5 {
                        let r = check_decoder_seed(seed, &check).unwrap();
                        assert!(r.report.passed || r.skipped, "{rep:?} {mode} {loss} seed {seed}: {:?}", r.report);
                    }
                }
            }
        }
    }

    #[test]
    fn clamped_rays_pass_no_gradient() {
        // DC 1 plus a first harmonic of amplitude 2: rays go negative around n = N/2.
        let n = 16;
        let mut coeffs = vec![Complex64::default(); n];
        coeffs[0] = Complex64::new(n as f64, 0.0);
        coeffs[1] = Complex64::new(n as f64, 0.0);
        coeffs[n - 1] = Complex64::new(n as f64, 0.0);
        let descriptor = FourierDescriptor::new(coeffs, 2, Branch::Polar, TruncationMode::Symmetric).unwrap();
        let target = Polygon::from_coords(&[(-5.0, -5.0), (5.0, -5.0), (5.0, 5.0), (-5.0, 5.0)]).unwrap();
        let code = ShapeCode::Polar { descriptor: descriptor.clone(), center: Point::ORIGIN };
        let config = LossConfig::new(LossKind::PolarIou);
        let full = loss_through_decoder(&code, &target, &config).unwrap();

        // Same loss with the clamped rays' dependence on the parameters removed.
        let raw = descriptor.decode_real();
        let clamped: Vec<bool> = raw.iter().map(|&r| r < crate::EPSILON_RAY).collect();
        assert!(clamped.iter().any(|&c| c));
        let rays: Vec<f64> = raw.iter().map(|r| r.max(crate::EPSILON_RAY)).collect();
        let target_rays = extract_radial(&target, Point::ORIGIN, n).unwrap().contour;
        let mut g = crate::losses::polar_iou_loss(&rays, target_rays.rays()).unwrap().grad;
        for (gi, c) in g.iter_mut().zip(&clamped) {
            if *c {
                *gi = 0.0;
            }
        }
        assert_eq!(full.grad, descriptor.backpropagate(&g).unwrap());

        // And the finite-difference check agrees (the clamp is flat there).
        let check = DecoderCheck::new(n, 2, TruncationMode::Symmetric, Representation::Polar, LossKind::PolarIou);
        let r = check_decoder_at(0, &code, &target, &check).unwrap();
        assert!(r.report.passed, "{:?}", r.report);
    }
}
