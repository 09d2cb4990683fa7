//! Side-length densities of a uniform random triangle in a disk.
//!
//! Every function accepts the disk radius and evaluates at unit radius
//! internally. Densities return 0 outside their support.
//!
//! The bivariate density of two sides sharing a vertex is, for `y <= x`,
//! the closed form [`phi`] on `x + y <= 2R` and [`psi`] beyond it; both carry
//! the integral [`inner_kernel`] over the distance `t` of the shared vertex
//! from the center. [`pair_density_subcase_oracle`] evaluates the same
//! density directly as a mixture over `t` of products of conditional
//! densities, with no use of the closed forms.

use std::f64::consts::PI;

use crate::domain::{classify_region, Radius, RegionTag};
use crate::error::{Error, Result};
use crate::quadrature::{interior_points, try_integrate_1d, IntegrationSpec, QuadratureResult};

/// Tolerated excursion of an arccos argument beyond [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampPolicy {
    pub slack: f64,
}

impl Default for ClampPolicy {
    fn default() -> Self {
        ClampPolicy { slack: 1e-9 }
    }
}

impl ClampPolicy {
    pub fn new(slack: f64) -> Result<Self> {
        if slack >= 0.0 {
            Ok(ClampPolicy { slack })
        } else {
            Err(Error::Argument(format!("clamp slack must be nonnegative, got {slack}")))
        }
    }

    fn acos(&self, arg: f64, t: f64, x: f64, y: Option<f64>) -> Result<f64> {
        if arg >= 1.0 && arg <= 1.0 + self.slack {
            Ok(0.0)
        } else if arg <= -1.0 && arg >= -1.0 - self.slack {
            Ok(PI)
        } else if arg > -1.0 && arg < 1.0 {
            Ok(arg.acos())
        } else {
            Err(Error::ArccosDomain { arg, t, x, y })
        }
    }

    /// `acos(1 - gap)`, accurate when the argument is near 1 because `gap`
    /// is supplied directly instead of being recovered from a rounded
    /// argument.
    fn acos_gap(&self, gap: f64, t: f64, x: f64, y: Option<f64>) -> Result<f64> {
        if (0.0..=2.0).contains(&gap) {
            Ok(2.0 * (0.5 * gap).sqrt().asin())
        } else {
            self.acos(1.0 - gap, t, x, y)
        }
    }
}

/// Quadrature settings for the `t` integrals behind the bivariate density.
pub fn kernel_spec() -> IntegrationSpec {
    IntegrationSpec::one_dim()
        .with_tolerances(1e-14, 1e-13)
        .with_smoothing(true)
}

// (t^2 + x^2 - 1) / (2 t x) at unit radius, with x^2 - 1 formed as a product
// so that the argument keeps full relative accuracy near x = 1.
#[inline]
fn law_of_cosines(t: f64, x: f64) -> f64 {
    (t * t + (x - 1.0) * (x + 1.0)) / (2.0 * t * x)
}

/// Density of the distance between two independent uniform points of the
/// disk, i.e. of any one side.
pub fn side_density(x: f64, r: Radius) -> f64 {
    side_density_unit(x / r.get()) / r.get()
}

fn side_density_unit(x: f64) -> f64 {
    if !(x > 0.0 && x < 2.0) {
        return 0.0;
    }
    let v = 4.0 * x / PI * (0.5 * x).acos() - x * x / PI * ((2.0 - x) * (2.0 + x)).sqrt();
    v.max(0.0)
}

/// Density of the squared side `a^2`, supported on `(0, 4R^2)`.
pub fn side_sq_density(x: f64, r: Radius) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let root = x.sqrt();
    side_density(root, r) / (2.0 * root)
}

/// Density of the distance from a point at distance `t` from the center to
/// an independent uniform point of the disk: the arc of the circle of
/// radius `x` around the point that lies inside the disk, over `pi R^2`.
pub fn conditional_side_density(x: f64, t: f64, r: Radius, clamp: ClampPolicy) -> Result<f64> {
    let rr = r.get();
    if !(t >= 0.0 && t <= rr) {
        return Err(Error::Domain(format!(
            "conditional density needs 0 <= t <= R, got t={t}, R={rr}"
        )));
    }
    let (x1, t1) = (x / rr, t / rr);
    let v = if !(x1 > 0.0) || x1 >= t1 + 1.0 {
        0.0
    } else if x1 + t1 <= 1.0 {
        2.0 * x1
    } else {
        2.0 * x1 / PI * clamp.acos(law_of_cosines(t1, x1), t, x, None)?
    };
    Ok(v / rr)
}

/// `int_lower^R t acos(.x) acos(.y) dt`, the integral shared by [`phi`]
/// (with `lower = R - y`) and [`psi`] (with `lower = x - R`). Each factor is
/// the half-angle of the arc of the circle of radius x (or y) around a
/// point at distance t that lies inside the disk.
pub fn inner_kernel(
    x: f64,
    y: f64,
    lower: f64,
    r: Radius,
    clamp: ClampPolicy,
    spec: &IntegrationSpec,
) -> Result<QuadratureResult<f64>> {
    let rr = r.get();
    if !(lower >= 0.0 && lower <= rr) {
        return Err(Error::Domain(format!(
            "inner_kernel needs 0 <= lower <= R, got lower={lower}, R={rr}"
        )));
    }
    let mut res = kernel_unit(x / rr, y / rr, lower / rr, clamp, spec)?;
    // t dt carries two powers of length
    res.value *= rr * rr;
    res.err_estimate *= rr * rr;
    Ok(res)
}

fn kernel_unit(
    x: f64,
    y: f64,
    lower: f64,
    clamp: ClampPolicy,
    spec: &IntegrationSpec,
) -> Result<QuadratureResult<f64>> {
    if !(lower < 1.0) {
        return Ok(QuadratureResult {
            value: 0.0,
            err_estimate: 0.0,
            n_evals: 0,
            status: crate::quadrature::Status::Converged,
        });
    }
    let spec = IntegrationSpec {
        split_points: interior_points([(1.0 - x).abs(), (1.0 - y).abs()], lower, 1.0),
        ..spec.clone()
    };
    try_integrate_1d(
        |t| {
            let ax = clamp.acos(law_of_cosines(t, x), t, x, Some(y))?;
            let ay = clamp.acos(law_of_cosines(t, y), t, x, Some(y))?;
            Ok(t * ax * ay)
        },
        lower,
        1.0,
        &spec,
    )
}

// Coordinates within this relative distance of a region edge are accepted
// by phi and psi.
const REGION_EDGE: f64 = 1e-12;

/// Closed form of the bivariate side density on `y <= x`, `x + y <= 2R`.
pub fn phi(x: f64, y: f64, r: Radius) -> Result<f64> {
    let rr = r.get();
    let (x1, y1) = (x / rr, y / rr);
    if !(y1 >= 0.0 && y1 <= x1 * (1.0 + REGION_EDGE) && x1 + y1 <= 2.0 * (1.0 + REGION_EDGE)) {
        return Err(Error::Region { func: "phi", x, y });
    }
    Ok(phi_unit(x1, y1, -1.0)? / (rr * rr))
}

/// Unit-radius phi. `sqrt_sign` is -1 for the true density; tests flip it
/// to confirm that the normalization check detects a corrupted formula.
fn phi_unit(x: f64, y: f64, sqrt_sign: f64) -> Result<f64> {
    if x == 0.0 || y == 0.0 {
        return Ok(0.0);
    }
    let clamp = ClampPolicy::default();
    let radicand = (2.0 - x - y).max(0.0) * (x - y).max(0.0) * (2.0 + x - y).max(0.0) * (x + y).max(0.0);
    let d = 1.0 - y;
    // the (R - y)^2 coefficient makes this term vanish at y = R
    let first = if d.abs() < 1e-12 {
        0.0
    } else {
        // 1 - arg for arg = (x^2 - 1 + d^2) / (2xd), factored so that it
        // vanishes exactly on x + y = 2
        let gap = (2.0 - x - y) * (x + y) / (2.0 * x * d);
        // the argument moves by ~1/d per unit of x, so the accepted region
        // edge widens the tolerated excursion accordingly
        let edge = ClampPolicy {
            slack: clamp.slack + 8.0 * REGION_EDGE / d.abs(),
        };
        2.0 * d * d * edge.acos_gap(gap, 1.0 - y, x, Some(y))?
    };
    // 1 - arg for arg = (x^2 + 1 - d^2) / (2x)
    let gap = (2.0 - x - y) * (x - y) / (2.0 * x);
    let second = 2.0 * clamp.acos_gap(gap, 1.0, x, Some(y))?;
    let bracket = sqrt_sign * radicand.sqrt() + first + second;
    // equal to R - y inside the region; the max only matters on its edges
    let lower = d.max((x - 1.0).abs());
    let kernel = kernel_unit(x, y, lower, clamp, &kernel_spec())?;
    Ok(2.0 * x * y / PI * bracket + 8.0 * x * y / (PI * PI) * kernel.value)
}

/// Bivariate side density on `y <= x`, `x + y > 2R`.
pub fn psi(x: f64, y: f64, r: Radius) -> Result<f64> {
    let rr = r.get();
    let (x1, y1) = (x / rr, y / rr);
    if !(y1 >= 0.0
        && y1 <= x1 * (1.0 + REGION_EDGE)
        && x1 <= 2.0 * (1.0 + REGION_EDGE)
        && x1 + y1 >= 2.0 * (1.0 - REGION_EDGE))
    {
        return Err(Error::Region { func: "psi", x, y });
    }
    Ok(psi_unit(x1, y1)? / (rr * rr))
}

fn psi_unit(x: f64, y: f64) -> Result<f64> {
    let lower = (x - 1.0).max((1.0 - y).abs());
    let kernel = kernel_unit(x, y, lower, ClampPolicy::default(), &kernel_spec())?;
    Ok(8.0 * x * y / (PI * PI) * kernel.value)
}

/// Joint density of two sides of the triangle, over `[0, 2R]^2`.
pub fn pair_density(x: f64, y: f64, r: Radius) -> Result<f64> {
    let rr = r.get();
    let v = match classify_region(x, y, r) {
        RegionTag::OutOfSupport => return Ok(0.0),
        RegionTag::PhiLower => phi_unit(x / rr, y / rr, -1.0)?,
        RegionTag::PhiUpper => phi_unit(y / rr, x / rr, -1.0)?,
        RegionTag::PsiLower => psi_unit(x / rr, y / rr)?,
        RegionTag::PsiUpper => psi_unit(y / rr, x / rr)?,
    };
    Ok(v / (rr * rr))
}

#[cfg(test)]
pub(crate) fn pair_density_mutated(x: f64, y: f64) -> Result<f64> {
    match classify_region(x, y, Radius::UNIT) {
        RegionTag::PhiLower => phi_unit(x, y, 1.0),
        RegionTag::PhiUpper => phi_unit(y, x, 1.0),
        _ => pair_density(x, y, Radius::UNIT),
    }
}

/// Which arccos factors appear on one `t` interval of the mixture integral.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    /// both circles lie inside the disk
    Inside,
    /// only the circle of radius x crosses the boundary
    XArc,
    /// only the circle of radius y crosses the boundary
    YArc,
    Both,
}

/// Which of the six subcases of the support holds `(x, y)`, numbered 1-3
/// for `y <= x` (`x <= R`, `x > R` with `x + y <= 2R`, `x + y > 2R`) and 4-6
/// for the mirrored cases. `None` outside the support.
pub fn subcase_index(x: f64, y: f64, r: Radius) -> Option<u8> {
    if classify_region(x, y, r) == RegionTag::OutOfSupport {
        return None;
    }
    let (x1, y1) = (x / r.get(), y / r.get());
    let (hi, lo, base) = if y1 <= x1 { (x1, y1, 1) } else { (y1, x1, 4) };
    Some(if hi <= 1.0 {
        base
    } else if lo <= 2.0 - hi {
        base + 1
    } else {
        base + 2
    })
}

/// Intervals of the `t` integral for each of the six subcases of the
/// support, at unit radius.
fn subcase_pieces(x: f64, y: f64) -> Vec<(f64, f64, Piece)> {
    use Piece::*;
    if y <= x {
        if x <= 1.0 {
            vec![(0.0, 1.0 - x, Inside), (1.0 - x, 1.0 - y, XArc), (1.0 - y, 1.0, Both)]
        } else if y <= 2.0 - x {
            vec![(x - 1.0, 1.0 - y, XArc), (1.0 - y, 1.0, Both)]
        } else {
            vec![(x - 1.0, 1.0, Both)]
        }
    } else if y <= 1.0 {
        vec![(0.0, 1.0 - y, Inside), (1.0 - y, 1.0 - x, YArc), (1.0 - x, 1.0, Both)]
    } else if x <= 2.0 - y {
        vec![(y - 1.0, 1.0 - x, YArc), (1.0 - x, 1.0, Both)]
    } else {
        vec![(y - 1.0, 1.0, Both)]
    }
}

/// The bivariate density evaluated as the mixture
/// `int_0^R f(x|t) f(y|t) (2t/R^2) dt`, split into the pieces on which the
/// conditional densities have a fixed form.
pub fn pair_density_subcase_oracle(x: f64, y: f64, r: Radius, spec: &IntegrationSpec) -> Result<f64> {
    let rr = r.get();
    if classify_region(x, y, r) == RegionTag::OutOfSupport {
        return Err(Error::Domain(format!("({x}, {y}) is outside the support")));
    }
    let (x1, y1) = (x / rr, y / rr);
    if x1 == 0.0 || y1 == 0.0 {
        return Ok(0.0);
    }
    let clamp = ClampPolicy::default();
    let mut total = 0.0;
    for (lo, hi, piece) in subcase_pieces(x1, y1) {
        if !(hi > lo) {
            continue;
        }
        let res = try_integrate_1d(
            |t| {
                let fx = match piece {
                    Piece::Inside | Piece::YArc => 2.0 * x1,
                    Piece::XArc | Piece::Both => 2.0 * x1 / PI * clamp.acos(law_of_cosines(t, x1), t, x, Some(y))?,
                };
                let fy = match piece {
                    Piece::Inside | Piece::XArc => 2.0 * y1,
                    Piece::YArc | Piece::Both => 2.0 * y1 / PI * clamp.acos(law_of_cosines(t, y1), t, x, Some(y))?,
                };
                Ok(fx * fy * 2.0 * t)
            },
            lo,
            hi,
            spec,
        )?;
        total += res.value;
    }
    Ok(total / (rr * rr))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_1d, try_integrate_2d, KinkLines};
    use proptest::prelude::*;

    const R1: Radius = Radius::UNIT;

    fn oracle(x: f64, y: f64) -> f64 {
        pair_density_subcase_oracle(x, y, R1, &kernel_spec()).unwrap()
    }

    #[test]
    fn side_density_values() {
        assert_eq!(side_density(0.0, R1), 0.0);
        assert_eq!(side_density(2.0, R1), 0.0);
        assert_eq!(side_density(2.5, R1), 0.0);
        assert_eq!(side_density(-0.5, R1), 0.0);
        // 4/3 - sqrt(3)/pi, mpmath
        assert!((side_density(1.0, R1) - 0.782004437911541284).abs() < 1e-15);
        let r2 = Radius::new(2.0).unwrap();
        assert!((side_density(2.0, r2) - 0.5 * side_density(1.0, R1)).abs() < 1e-16);
    }

    #[test]
    fn side_sq_density_values() {
        assert_eq!(side_sq_density(4.0, R1), 0.0);
        assert_eq!(side_sq_density(0.0, R1), 0.0);
        assert!((side_sq_density(1.0, R1) - 0.782004437911541284 / 2.0).abs() < 1e-15);
        let s = IntegrationSpec::one_dim().with_smoothing(true);
        let r = integrate_1d(|x| side_sq_density(x, R1), 0.0, 4.0, &s).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn side_density_normalized() {
        let s = IntegrationSpec::one_dim().with_smoothing(true);
        for rad in [1.0, 0.5, 3.0] {
            let r = Radius::new(rad).unwrap();
            let res = integrate_1d(|x| side_density(x, r), 0.0, 2.0 * rad, &s).unwrap();
            assert!((res.value - 1.0).abs() < 1e-10, "R={rad}: {}", res.value);
        }
    }

    #[test]
    fn conditional_density_values() {
        let c = ClampPolicy::default();
        assert!((conditional_side_density(0.3, 0.2, R1, c).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(conditional_side_density(1.4, 0.4, R1, c).unwrap(), 0.0);
        // (2.4/pi) acos(0.575), mpmath
        let v = conditional_side_density(1.2, 0.5, R1, c).unwrap();
        assert!((v - 0.732004904061419853).abs() < 1e-15);
        assert!(conditional_side_density(0.5, 1.5, R1, c).is_err());
        assert!(conditional_side_density(0.5, -0.1, R1, c).is_err());
    }

    #[test]
    fn conditional_density_mixes_to_side_density() {
        let c = ClampPolicy::default();
        for x in [0.5f64, 1.0, 1.5] {
            let splits = interior_points([(1.0 - x).abs()], 0.0, 1.0);
            let s = kernel_spec().with_splits(splits);
            let r = try_integrate_1d(
                |t| Ok(conditional_side_density(x, t, R1, c)? * 2.0 * t),
                0.0,
                1.0,
                &s,
            )
            .unwrap();
            assert!((r.value - side_density(x, R1)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn clamp_policy() {
        let c = ClampPolicy::default();
        assert_eq!(c.acos(1.0 + 5e-10, 0.0, 0.0, None).unwrap(), 0.0);
        assert_eq!(c.acos(-1.0 - 5e-10, 0.0, 0.0, None).unwrap(), PI);
        assert!(matches!(c.acos(1.0 + 1e-8, 0.1, 0.2, None), Err(Error::ArccosDomain { .. })));
        assert!(c.acos(f64::NAN, 0.0, 0.0, None).is_err());
        assert!(ClampPolicy::new(-1.0).is_err());
    }

    #[test]
    fn inner_kernel_anchor_and_symmetry() {
        let c = ClampPolicy::default();
        let s = kernel_spec();
        // int_0^1 t acos(t/2)^2 dt, mpmath
        let k = inner_kernel(1.0, 1.0, 0.0, R1, c, &s).unwrap();
        assert!((k.value - 0.762190062539155251).abs() < 1e-13);
        assert_eq!(inner_kernel(0.7, 0.4, 1.0, R1, c, &s).unwrap().value, 0.0);
        for (x, y, lo) in [(0.9, 0.6, 0.4), (1.5, 1.2, 0.5), (1.1, 0.95, 0.1)] {
            let a = inner_kernel(x, y, lo, R1, c, &s).unwrap().value;
            let b = inner_kernel(y, x, lo, R1, c, &s).unwrap().value;
            assert!((a - b).abs() < 1e-14);
        }
        // lower below |R - x| leaves the arccos domain
        assert!(matches!(
            inner_kernel(0.3, 0.3, 0.1, R1, c, &s),
            Err(Error::ArccosDomain { .. })
        ));
        let r2 = Radius::new(2.0).unwrap();
        let scaled = inner_kernel(2.0, 2.0, 0.0, r2, c, &s).unwrap().value;
        assert!((scaled - 4.0 * k.value).abs() < 1e-12);
    }

    #[test]
    fn phi_matches_oracle() {
        assert_eq!(phi(1e-300, 0.0, R1).unwrap(), 0.0);
        for (x, y) in [(1.0, 1.0), (0.8, 0.5), (0.5, 0.3), (1.3, 0.4), (1.2, 0.8), (0.9, 0.9)] {
            let d = phi(x, y, R1).unwrap() - oracle(x, y);
            assert!(d.abs() < 1e-9, "({x},{y}): {d}");
        }
        // reference values from an independent scipy evaluation
        assert!((phi(1.0, 1.0, R1).unwrap() - 0.6178079943751573).abs() < 1e-12);
        assert!((phi(0.8, 0.5, R1).unwrap() - 0.5929034936912880).abs() < 1e-12);
    }

    #[test]
    fn psi_matches_oracle() {
        for (x, y) in [(1.5, 0.7), (1.7, 0.6), (1.9, 1.9), (1.99, 0.5), (1.2, 1.1)] {
            let d = psi(x, y, R1).unwrap() - oracle(x, y);
            assert!(d.abs() < 1e-9, "({x},{y}): {d}");
        }
        assert!((psi(1.5, 0.7, R1).unwrap() - 0.2812170286167027).abs() < 1e-12);
        for y in [0.0, 0.5, 1.3, 2.0] {
            assert_eq!(psi(2.0, y, R1).unwrap(), 0.0);
        }
    }

    #[test]
    fn region_errors() {
        assert!(matches!(phi(0.3, 0.5, R1), Err(Error::Region { func: "phi", .. })));
        assert!(matches!(phi(1.5, 0.9, R1), Err(Error::Region { .. })));
        assert!(matches!(psi(0.5, 0.3, R1), Err(Error::Region { func: "psi", .. })));
        assert!(matches!(psi(2.1, 0.5, R1), Err(Error::Region { .. })));
    }

    #[test]
    fn phi_at_y_equal_radius() {
        // the first arccos term drops out; continuity from below
        let at = phi(1.0, 1.0, R1).unwrap();
        let near = phi(1.0 + 1e-7, 1.0 - 1e-7, R1).unwrap();
        assert!((at - near).abs() < 1e-6);
        let v = phi(1.3, 1.0 - 1e-11, R1);
        assert!(v.is_err(), "point is past the anti-diagonal");
        let v = phi(0.9999, 1.0 - 1e-11, R1);
        assert!(v.is_err(), "point is above the diagonal");
        assert!(phi(1.0 - 1e-11, 1.0 - 1e-11, R1).unwrap() > 0.0);
    }

    #[test]
    fn boundary_continuity() {
        for x in [1.05, 1.2, 1.5, 1.8] {
            let y = 2.0 - x;
            let d = phi(x, y, R1).unwrap() - psi(x, y, R1).unwrap();
            assert!(d.abs() <= 1e-8, "x={x}: {d}");
        }
        // the closed-form bracket vanishes on the anti-diagonal
        assert!((phi(1.2, 0.8, R1).unwrap() - 0.5196261714789701).abs() < 1e-12);
    }

    #[test]
    fn pair_density_dispatch() {
        let a = pair_density(0.3, 0.5, R1).unwrap();
        let b = pair_density(0.5, 0.3, R1).unwrap();
        assert_eq!(a, b);
        assert_eq!(pair_density(2.1, 0.5, R1).unwrap(), 0.0);
        assert_eq!(pair_density(0.5, -0.1, R1).unwrap(), 0.0);
        assert_eq!(pair_density(0.0, 0.0, R1).unwrap(), 0.0);
        let r3 = Radius::new(3.0).unwrap();
        let scaled = pair_density(2.4, 1.5, r3).unwrap();
        assert!((scaled - pair_density(0.8, 0.5, R1).unwrap() / 9.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_on_every_subcase() {
        for (x, y) in [(0.8, 0.5), (1.4, 0.3), (1.7, 0.6), (0.5, 0.8), (0.3, 1.4), (0.6, 1.7)] {
            let d = pair_density(x, y, R1).unwrap() - oracle(x, y);
            assert!(d.abs() < 1e-9, "({x},{y}): {d}");
        }
        let r3 = Radius::new(3.0).unwrap();
        let d = pair_density_subcase_oracle(2.4, 1.5, r3, &kernel_spec()).unwrap() - oracle(0.8, 0.5) / 9.0;
        assert!(d.abs() < 1e-12);
        assert!(pair_density_subcase_oracle(2.5, 0.5, R1, &kernel_spec()).is_err());
    }

    #[test]
    fn subcases_are_numbered() {
        let pts = [(0.8, 0.5), (1.4, 0.3), (1.7, 0.6), (0.5, 0.8), (0.3, 1.4), (0.6, 1.7)];
        for (k, (x, y)) in pts.iter().enumerate() {
            assert_eq!(subcase_index(*x, *y, R1), Some(k as u8 + 1));
        }
        assert_eq!(subcase_index(2.5, 0.1, R1), None);
    }

    #[test]
    fn oracle_equivalence_grid() {
        let n = 20;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = 2.0 * (i as f64 + 0.5) / n as f64;
                let y = 2.0 * (j as f64 + 0.5) / n as f64;
                let d = (pair_density(x, y, R1).unwrap() - oracle(x, y)).abs();
                worst = worst.max(d);
            }
        }
        assert!(worst < 1e-8, "worst deviation {worst}");
    }

    #[test]
    fn marginal_is_side_density() {
        let s = IntegrationSpec::one_dim().with_tolerances(1e-12, 1e-11).with_smoothing(true);
        for x in [0.25, 0.75, 1.0, 1.5, 1.9] {
            let splits = interior_points([x, 2.0 - x, 1.0], 0.0, 2.0);
            let r = try_integrate_1d(|y| pair_density(x, y, R1), 0.0, 2.0, &s.clone().with_splits(splits)).unwrap();
            let d = r.value - side_density(x, R1);
            assert!(d.abs() < 1e-7, "x={x}: {d}");
        }
    }

    #[test]
    fn flipped_sqrt_term_breaks_normalization() {
        let s = IntegrationSpec::two_dim().with_tolerances(1e-7, 1e-7).with_smoothing(true);
        let kinks = KinkLines::all(1.0);
        let good = try_integrate_2d(|x, y| pair_density(x, y, R1), (0.0, 2.0), (0.0, 2.0), &s, kinks).unwrap();
        let bad = try_integrate_2d(pair_density_mutated, (0.0, 2.0), (0.0, 2.0), &s, kinks).unwrap();
        assert!((good.value - 1.0).abs() < 1e-6);
        assert!((bad.value - 1.0).abs() > 1e-2, "mutant integrates to {}", bad.value);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn densities_nonnegative(x in 0.0f64..2.0, y in 0.0f64..2.0) {
            prop_assert!(pair_density(x, y, R1).unwrap() >= 0.0);
            prop_assert!(side_density(x, R1) >= 0.0);
            prop_assert!(side_sq_density(2.0 * x, R1) >= 0.0);
        }

        #[test]
        fn pair_density_symmetric(x in 0.0f64..2.0, y in 0.0f64..2.0) {
            prop_assert_eq!(pair_density(x, y, R1).unwrap(), pair_density(y, x, R1).unwrap());
        }

        #[test]
        fn closed_forms_agree_across_orders(x in 0.01f64..1.99, y in 0.01f64..1.99) {
            // direct phi/psi on the mirrored point versus dispatch
            let (hi, lo) = if y <= x { (x, y) } else { (y, x) };
            let direct = if hi + lo <= 2.0 { phi(hi, lo, R1) } else { psi(hi, lo, R1) }.unwrap();
            prop_assert!((direct - pair_density(lo, hi, R1).unwrap()).abs() <= 1e-10);
        }
    }
}
