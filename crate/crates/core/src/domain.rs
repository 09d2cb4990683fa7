//! Domain types shared by every module, support-region classification of
//! side-length pairs, and rescaling by homogeneity.
//!
//! All numerical work happens at unit radius. Public entry points accept a
//! [`Radius`] and convert with [`scale_by_homogeneity`].

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Characteristic-function values.
pub type ComplexScalar = Complex64;

/// Radius of the disk. Always strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Radius(f64);

impl Radius {
    pub const UNIT: Radius = Radius(1.0);

    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r > 0.0 {
            Ok(Radius(r))
        } else {
            Err(Error::Argument(format!("radius must be positive and finite, got {r}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Radius {
    fn default() -> Self {
        Radius::UNIT
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A point of the plane, in length units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Point {
    pub xi: f64,
    pub eta: f64,
}

impl Point {
    pub fn new(xi: f64, eta: f64) -> Self {
        Point { xi, eta }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.xi - other.xi).hypot(self.eta - other.eta)
    }

    pub fn norm_sq(self) -> f64 {
        self.xi * self.xi + self.eta * self.eta
    }
}

/// Side lengths of one triangle; `a` is opposite vertex A, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TriangleSample {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangleSample {
    /// Sides of the triangle with vertices `va`, `vb`, `vc`.
    pub fn from_vertices(va: Point, vb: Point, vc: Point) -> Self {
        TriangleSample {
            a: vb.distance(vc),
            b: vc.distance(va),
            c: va.distance(vb),
        }
    }

    pub fn perimeter(&self) -> f64 {
        self.a + self.b + self.c
    }
}

/// Which branch of the bivariate side density covers a point `(x, y)`.
///
/// `Lower` tags have `y <= x`; `Upper` tags are their mirror images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionTag {
    /// `y <= x` and `x + y <= 2R`.
    PhiLower,
    /// `y <= x <= 2R` and `x + y > 2R`.
    PsiLower,
    PhiUpper,
    PsiUpper,
    OutOfSupport,
}

impl RegionTag {
    /// The tag of the point with its coordinates swapped.
    pub fn mirrored(self) -> RegionTag {
        match self {
            RegionTag::PhiLower => RegionTag::PhiUpper,
            RegionTag::PhiUpper => RegionTag::PhiLower,
            RegionTag::PsiLower => RegionTag::PsiUpper,
            RegionTag::PsiUpper => RegionTag::PsiLower,
            RegionTag::OutOfSupport => RegionTag::OutOfSupport,
        }
    }

    pub fn is_upper(self) -> bool {
        matches!(self, RegionTag::PhiUpper | RegionTag::PsiUpper)
    }
}

/// Classify `(x, y)` against the support `[0, 2R]^2` of the bivariate
/// density. The line `x + y = 2R` belongs to the Phi side and the diagonal
/// `x = y` to the Lower side. Non-finite input is out of support.
pub fn classify_region(x: f64, y: f64, r: Radius) -> RegionTag {
    let two_r = 2.0 * r.get();
    if !(x.is_finite() && y.is_finite()) || x.min(y) < 0.0 || x.max(y) > two_r {
        return RegionTag::OutOfSupport;
    }
    let (hi, lo, lower) = if y <= x { (x, y, true) } else { (y, x, false) };
    let phi = hi + lo <= two_r;
    match (phi, lower) {
        (true, true) => RegionTag::PhiLower,
        (false, true) => RegionTag::PsiLower,
        (true, false) => RegionTag::PhiUpper,
        (false, false) => RegionTag::PsiUpper,
    }
}

/// `value_at_unit_radius * R^degree`, where `degree` is the length
/// dimension of the quantity (1 for a mean side, -2 for a bivariate density).
pub fn scale_by_homogeneity(value_at_unit_radius: f64, r: Radius, degree: i32) -> f64 {
    value_at_unit_radius * r.get().powi(degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classify_examples() {
        let r = Radius::UNIT;
        assert_eq!(classify_region(0.5, 0.3, r), RegionTag::PhiLower);
        assert_eq!(classify_region(1.8, 0.9, r), RegionTag::PsiLower);
        assert_eq!(classify_region(2.5, 0.1, r), RegionTag::OutOfSupport);
        assert_eq!(classify_region(0.3, 0.5, r), RegionTag::PhiUpper);
        assert_eq!(classify_region(0.9, 1.8, r), RegionTag::PsiUpper);
        assert_eq!(classify_region(-0.1, 0.5, r), RegionTag::OutOfSupport);
        assert_eq!(classify_region(f64::NAN, 0.5, r), RegionTag::OutOfSupport);
    }

    #[test]
    fn classify_boundary_conventions() {
        let r = Radius::UNIT;
        assert_eq!(classify_region(1.2, 0.8, r), RegionTag::PhiLower);
        assert_eq!(classify_region(0.8, 1.2, r), RegionTag::PhiUpper);
        assert_eq!(classify_region(0.7, 0.7, r), RegionTag::PhiLower);
        assert_eq!(classify_region(1.5, 1.5, r), RegionTag::PsiLower);
        assert_eq!(classify_region(2.0, 2.0, r), RegionTag::PsiLower);
        assert_eq!(classify_region(0.0, 0.0, r), RegionTag::PhiLower);
        let r3 = Radius::new(3.0).unwrap();
        assert_eq!(classify_region(5.4, 2.7, r3), RegionTag::PsiLower);
    }

    #[test]
    fn classify_partitions_grid() {
        let r = Radius::UNIT;
        let mut counts = [0usize; 5];
        let n = 200;
        for i in 0..n {
            for j in 0..n {
                let x = 2.0 * i as f64 / (n - 1) as f64;
                let y = 2.0 * j as f64 / (n - 1) as f64;
                let idx = match classify_region(x, y, r) {
                    RegionTag::PhiLower => 0,
                    RegionTag::PsiLower => 1,
                    RegionTag::PhiUpper => 2,
                    RegionTag::PsiUpper => 3,
                    RegionTag::OutOfSupport => 4,
                };
                counts[idx] += 1;
            }
        }
        assert_eq!(counts[4], 0);
        assert_eq!(counts.iter().sum::<usize>(), n * n);
        assert!(counts[..4].iter().all(|&c| c > 0));
    }

    #[test]
    fn scale_examples() {
        let two = Radius::new(2.0).unwrap();
        assert!((scale_by_homogeneity(0.9054147874, two, 1) - 1.8108295748).abs() < 1e-12);
        assert_eq!(scale_by_homogeneity(1.0833333333, Radius::UNIT, 4), 1.0833333333);
        let three = Radius::new(3.0).unwrap();
        assert!((scale_by_homogeneity(13.0 / 12.0, three, 4) - 87.75).abs() < 1e-12);
    }

    #[test]
    fn radius_validation() {
        assert!(Radius::new(0.0).is_err());
        assert!(Radius::new(-1.0).is_err());
        assert!(Radius::new(f64::INFINITY).is_err());
        assert!(Radius::new(f64::NAN).is_err());
    }

    #[test]
    fn sides_from_vertices() {
        let t = TriangleSample::from_vertices(
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(0.0, 4.0),
        );
        assert_eq!((t.a, t.b, t.c), (5.0, 4.0, 3.0));
        assert_eq!(t.perimeter(), 12.0);
    }

    proptest! {
        #[test]
        fn swap_mirrors_tag(x in 0.0f64..2.0, y in 0.0f64..2.0) {
            prop_assume!(x != y);
            let r = Radius::UNIT;
            prop_assert_eq!(classify_region(y, x, r), classify_region(x, y, r).mirrored());
        }

        #[test]
        fn out_of_support_iff_outside_square(x in -1.0f64..3.0, y in -1.0f64..3.0) {
            let out = x.max(y) > 2.0 || x.min(y) < 0.0;
            prop_assert_eq!(classify_region(x, y, Radius::UNIT) == RegionTag::OutOfSupport, out);
        }

        #[test]
        fn scaling_round_trip(v in -1e3f64..1e3, r in 0.1f64..10.0, d in -6i32..6) {
            let r = Radius::new(r).unwrap();
            let back = scale_by_homogeneity(v, r, d) * scale_by_homogeneity(1.0, r, -d);
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}
