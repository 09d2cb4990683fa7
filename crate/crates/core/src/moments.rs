//! Deterministic expectations of side-length functionals.
//!
//! Everything is computed at unit radius and scaled by its homogeneity
//! degree, so `value(R) = value(1) R^degree` holds to rounding.

use std::f64::consts::PI;

use num_rational::Ratio;
use serde::Serialize;

use crate::densities::{pair_density, side_density};
use crate::domain::{scale_by_homogeneity, Radius};
use crate::error::{Error, Result};
use crate::quadrature::{try_integrate_2d, integrate_1d, IntegrationSpec, KinkLines, QuadratureResult, Status};
use crate::specfun::catalan;

/// Reference constants at unit radius, to 16 significant digits.
pub mod reference {
    pub const E_A: f64 = 0.9054147873672268;
    pub const E_AB: f64 = 0.8378520652962219;
    pub const CORR_AB: f64 = 0.1002980835659002;
    pub const E_PERIMETER_SQ: f64 = 8.027112391777331;
    pub const VAR_PERIMETER: f64 = 0.6491289571281668;
    pub const E_A2B2: f64 = 13.0 / 12.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    Quadrature,
    CubeIntegral,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::ClosedForm => "closed_form",
            Route::Quadrature => "quadrature",
            Route::CubeIntegral => "cube_integral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub quantity: String,
    pub value: f64,
    pub route: Route,
    pub err_estimate: f64,
    pub reference_value: Option<f64>,
}

impl MomentReport {
    fn new(quantity: impl Into<String>, value: f64, route: Route, err_estimate: f64, reference_value: Option<f64>) -> Self {
        MomentReport {
            quantity: quantity.into(),
            value,
            route,
            err_estimate,
            reference_value,
        }
    }

    pub fn deviation(&self) -> Option<f64> {
        self.reference_value.map(|r| (self.value - r).abs())
    }

    /// True when there is no reference or the deviation is at most
    /// `max(err_estimate, tol)`.
    pub fn within(&self, tol: f64) -> bool {
        self.deviation().is_none_or(|d| d <= self.err_estimate.max(tol))
    }

    fn scaled(mut self, r: Radius, degree: i32) -> Self {
        let k = scale_by_homogeneity(1.0, r, degree);
        self.value *= k;
        self.err_estimate *= k;
        self.reference_value = self.reference_value.map(|v| v * k);
        self
    }
}

fn require_converged<V>(q: QuadratureResult<V>, what: &str) -> Result<QuadratureResult<V>> {
    match q.status {
        Status::Converged => Ok(q),
        Status::NotConverged { x, y } => Err(Error::Setup(format!(
            "{what}: quadrature did not converge near x={x}{}",
            y.map(|y| format!(", y={y}")).unwrap_or_default()
        ))),
    }
}

fn side_moment_spec() -> IntegrationSpec {
    IntegrationSpec::one_dim().with_tolerances(1e-14, 1e-13).with_smoothing(true)
}

fn pair_spec() -> IntegrationSpec {
    IntegrationSpec::two_dim().with_tolerances(1e-11, 1e-11)
}

/// `int_0^2 x^k f(x) dx` at unit radius.
fn side_power_integral(k: i32) -> Result<QuadratureResult<f64>> {
    let q = integrate_1d(|x| x.powi(k) * side_density(x, Radius::UNIT), 0.0, 2.0, &side_moment_spec())?;
    require_converged(q, "side moment")
}

/// `int int x^k y^k f(x, y) dx dy` over `[0, 2]^2` at unit radius.
fn pair_power_integral(k: i32) -> Result<QuadratureResult<f64>> {
    let q = try_integrate_2d(
        |x, y| Ok((x * y).powi(k) * pair_density(x, y, Radius::UNIT)?),
        (0.0, 2.0),
        (0.0, 2.0),
        &pair_spec(),
        KinkLines::all(1.0),
    )?;
    require_converged(q, "pair moment")
}

/// Total mass of the side density, a normalization check.
pub fn side_normalization() -> Result<MomentReport> {
    let q = side_power_integral(0)?;
    Ok(MomentReport::new("int_f", q.value, Route::Quadrature, q.err_estimate, Some(1.0)))
}

/// Total mass of the bivariate density over `[0, 2]^2`.
pub fn pair_normalization() -> Result<MomentReport> {
    let q = pair_power_integral(0)?;
    Ok(MomentReport::new("int_f_pair", q.value, Route::Quadrature, q.err_estimate, Some(1.0)))
}

/// `E(a)` by quadrature against `128 R / (45 pi)`.
pub fn expected_side(r: Radius) -> Result<MomentReport> {
    let q = side_power_integral(1)?;
    let closed = 128.0 / (45.0 * PI);
    Ok(MomentReport::new("E_a", q.value, Route::Quadrature, q.err_estimate, Some(closed)).scaled(r, 1))
}

/// `E(a^2)` by quadrature against `R^2`.
pub fn expected_side_sq(r: Radius) -> Result<MomentReport> {
    let q = side_power_integral(2)?;
    Ok(MomentReport::new("E_a2", q.value, Route::Quadrature, q.err_estimate, Some(1.0)).scaled(r, 2))
}

/// `Var(a) = E(a^2) - E(a)^2` from the closed forms.
pub fn variance_side(r: Radius) -> MomentReport {
    let ea = 128.0 / (45.0 * PI);
    MomentReport::new("Var_a", 1.0 - ea * ea, Route::ClosedForm, 0.0, None).scaled(r, 2)
}

/// `E(ab)` for two sides sharing a vertex, by kink-aware 2-D quadrature
/// over the full square.
pub fn expected_pair_product(r: Radius) -> Result<MomentReport> {
    let q = pair_power_integral(1)?;
    Ok(MomentReport::new("E_ab", q.value, Route::Quadrature, q.err_estimate, Some(reference::E_AB)).scaled(r, 2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerimeterStats {
    pub mean: MomentReport,
    pub second_moment: MomentReport,
    pub variance: MomentReport,
    pub correlation: MomentReport,
}

impl PerimeterStats {
    pub fn reports(&self) -> [&MomentReport; 4] {
        [&self.mean, &self.second_moment, &self.variance, &self.correlation]
    }
}

pub fn perimeter_stats(r: Radius) -> Result<PerimeterStats> {
    perimeter_stats_from(&expected_pair_product(r)?, r)
}

/// Perimeter moments and the side correlation from an existing `E(ab)`
/// report at radius `r`.
pub fn perimeter_stats_from(e_ab: &MomentReport, r: Radius) -> Result<PerimeterStats> {
    if e_ab.quantity != "E_ab" {
        return Err(Error::Argument(format!("expected an E_ab report, got {}", e_ab.quantity)));
    }
    let r2 = r.get() * r.get();
    let ab = e_ab.value / r2;
    let ab_err = e_ab.err_estimate / r2;
    let ea = 128.0 / (45.0 * PI);
    let var_a = 1.0 - ea * ea;

    let mean = MomentReport::new("E_perimeter", 3.0 * ea, Route::ClosedForm, 0.0, Some(3.0 * reference::E_A));
    let second = 3.0 + 6.0 * ab;
    let second_moment = MomentReport::new(
        "E_perimeter2",
        second,
        Route::Quadrature,
        6.0 * ab_err,
        Some(reference::E_PERIMETER_SQ),
    );
    let variance = MomentReport::new(
        "Var_perimeter",
        second - 9.0 * ea * ea,
        Route::Quadrature,
        6.0 * ab_err,
        Some(reference::VAR_PERIMETER),
    );
    let correlation = MomentReport::new(
        "rho_ab",
        (ab - ea * ea) / var_a,
        Route::Quadrature,
        ab_err / var_a,
        Some(reference::CORR_AB),
    );
    Ok(PerimeterStats {
        mean: mean.scaled(r, 1),
        second_moment: second_moment.scaled(r, 2),
        variance: variance.scaled(r, 2),
        correlation,
    })
}

/// `int int int (u+v)(u+w) du dv dw` over the unit cube, exactly.
pub fn cube_integral_exact() -> Ratio<i64> {
    // (u+v)(u+w) = u^2 + uw + uv + vw, as exponent triples (u, v, w)
    let monomials: [[i64; 3]; 4] = [[2, 0, 0], [1, 0, 1], [1, 1, 0], [0, 1, 1]];
    monomials
        .iter()
        .map(|e| Ratio::new(1, e.iter().map(|k| k + 1).product()))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqPairProduct {
    pub quadrature: MomentReport,
    pub cube_integral: MomentReport,
}

/// `E(a^2 b^2)` by 2-D quadrature of the bivariate density and by the
/// exact cube integral.
pub fn expected_sq_pair_product(r: Radius) -> Result<SqPairProduct> {
    let q = pair_power_integral(2)?;
    let exact = cube_integral_exact();
    let cube = *exact.numer() as f64 / *exact.denom() as f64;
    Ok(SqPairProduct {
        quadrature: MomentReport::new("E_a2b2", q.value, Route::Quadrature, q.err_estimate, Some(reference::E_A2B2))
            .scaled(r, 4),
        cube_integral: MomentReport::new("E_a2b2", cube, Route::CubeIntegral, 0.0, Some(reference::E_A2B2)).scaled(r, 4),
    })
}

pub const MAX_EVEN_MOMENT: u32 = 8;

/// `E(a^{2m})` by quadrature, referenced against `C_{m+1} / (m+1) R^{2m}`.
pub fn even_moment_side(m: u32, r: Radius) -> Result<MomentReport> {
    if m > MAX_EVEN_MOMENT {
        return Err(Error::Argument(format!("even moment order must be <= {MAX_EVEN_MOMENT}, got {m}")));
    }
    let q = side_power_integral(2 * m as i32)?;
    let reference = catalan(m + 1)? as f64 / (m + 1) as f64;
    Ok(MomentReport::new(format!("E_a{}", 2 * m), q.value, Route::Quadrature, q.err_estimate, Some(reference))
        .scaled(r, 2 * m as i32))
}

/// Every report, in a fixed order.
pub fn all_reports(r: Radius) -> Result<Vec<MomentReport>> {
    let e_ab = expected_pair_product(r)?;
    let perim = perimeter_stats_from(&e_ab, r)?;
    let sq = expected_sq_pair_product(r)?;
    let mut out = vec![expected_side(r)?, expected_side_sq(r)?, variance_side(r), e_ab];
    out.extend(perim.reports().into_iter().cloned());
    out.push(sq.quadrature);
    out.push(sq.cube_integral);
    for m in 2..=4 {
        out.push(even_moment_side(m, r)?);
    }
    Ok(out)
}
