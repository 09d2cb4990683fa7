//! Characteristic functions of the squared side lengths.
//!
//! `h(t) = exp(2it) (J0(2t) - i J1(2t)) = sum_n C_n (it)^n / n!`, and the
//! characteristic function of `a^2` at unit radius is `(i/t)(1 - h(t))`.
//! The same function is reachable through the density of `a^2` and through
//! a double integral over the unit square; the joint function of
//! `(a^2, b^2)` is a triple integral whose inner integrals have a Bessel
//! series (Boersma).

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::densities::side_sq_density;
use crate::domain::{ComplexScalar, Radius};
use crate::error::{Error, Result};
use crate::quadrature::{
    oscillation_splits, try_integrate_1d, try_integrate_iterated, IntegrationSpec, QuadratureResult, Status,
};
use crate::specfun::{catalan_series, j_half_unchecked, jn_unchecked, SeriesTruncation};

/// Largest supported frequency for the single-variable routes.
pub const MAX_FREQ: f64 = 50.0;
/// Largest supported frequency for the triple integral.
pub const MAX_PAIR_FREQ: f64 = 10.0;
/// Largest argument accepted by [`h_series`].
pub const MAX_SERIES_ARG: f64 = 5.0;
/// Below this the closed route switches to the power series.
const SMALL_T: f64 = 1e-3;
/// Above this the inner integrals of the triple integral use the Boersma
/// series instead of quadrature.
const BOERSMA_MIN_T: f64 = 0.5;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_freq(t: f64, limit: f64, what: &str) -> Result<()> {
    if t.abs() <= limit {
        Ok(())
    } else {
        Err(Error::Range(format!("{what} requires |t| <= {limit}, got {t}")))
    }
}

/// Frequencies `(s, t)` of the joint characteristic function of `(a^2, b^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharFunArgs {
    pub s: f64,
    pub t: f64,
}

impl CharFunArgs {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        check_freq(s, MAX_PAIR_FREQ, "charfun_pair")?;
        check_freq(t, MAX_PAIR_FREQ, "charfun_pair")?;
        Ok(CharFunArgs { s, t })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CharFunRoute {
    Closed,
    Density,
    DoubleIntegral,
}

impl CharFunRoute {
    pub const ALL: [CharFunRoute; 3] = [CharFunRoute::Closed, CharFunRoute::Density, CharFunRoute::DoubleIntegral];

    pub fn as_str(self) -> &'static str {
        match self {
            CharFunRoute::Closed => "closed",
            CharFunRoute::Density => "density",
            CharFunRoute::DoubleIntegral => "double_integral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharFunValue {
    pub value: ComplexScalar,
    pub err_estimate: f64,
}

impl CharFunValue {
    fn exact(value: ComplexScalar) -> Self {
        CharFunValue {
            value,
            err_estimate: 0.0,
        }
    }

    fn from_quadrature(q: QuadratureResult<Complex64>, what: &str) -> Result<Self> {
        match q.status {
            Status::Converged => Ok(CharFunValue {
                value: q.value,
                err_estimate: q.err_estimate,
            }),
            Status::NotConverged { x, y } => Err(Error::Setup(format!(
                "{what}: quadrature did not converge near x={x}{}",
                y.map(|y| format!(", y={y}")).unwrap_or_default()
            ))),
        }
    }
}

/// `h(t) = exp(2it) (J0(2t) - i J1(2t))`.
pub fn h_closed(t: f64) -> Result<ComplexScalar> {
    check_freq(t, MAX_FREQ, "h_closed")?;
    let bessel = Complex64::new(jn_unchecked(0, 2.0 * t), -jn_unchecked(1, 2.0 * t));
    Ok(Complex64::from_polar(1.0, 2.0 * t) * bessel)
}

/// `sum_n C_n (it)^n / n!`, truncated per `trunc`.
pub fn h_series(t: f64, trunc: SeriesTruncation) -> Result<ComplexScalar> {
    check_freq(t, MAX_SERIES_ARG, "h_series")?;
    let (re, im) = catalan_series(t, trunc, true)?;
    Ok(Complex64::new(re, im))
}

/// Coefficient of `(it)^n` in `h`, as `binom(2n, n) / (n+1)!`.
pub fn h_series_coefficient(n: u32) -> BigRational {
    let factorial = |k: u32| (1..=k).fold(BigInt::one(), |acc, j| acc * j);
    let binom = factorial(2 * n) / (factorial(n) * factorial(n));
    BigRational::new(binom, factorial(n + 1))
}

/// `sum_m C_{m+1} (it)^m / (m+1)!`, the expansion of `(i/t)(1 - h(t))`.
fn charfun_a2_series(t: f64) -> ComplexScalar {
    // c_m = C_{m+1} / (m+1)!, with c_m / c_{m-1} = 2(2m+1) / ((m+1)(m+2))
    let mut coeff = 1.0;
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(1.0, 0.0);
    for m in 1..30 {
        let mf = m as f64;
        coeff *= 2.0 * (2.0 * mf + 1.0) / ((mf + 1.0) * (mf + 2.0));
        power *= I * t;
        let term = power * coeff;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

fn charfun_a2_closed(t: f64) -> Result<ComplexScalar> {
    if t.abs() < SMALL_T {
        return Ok(charfun_a2_series(t));
    }
    Ok(I / t * (Complex64::new(1.0, 0.0) - h_closed(t)?))
}

fn charfun_a2_density(t: f64) -> Result<CharFunValue> {
    let spec = IntegrationSpec::one_dim()
        .with_tolerances(1e-13, 1e-12)
        .with_smoothing(true)
        .with_splits(oscillation_splits(0.0, 4.0, t));
    let q = try_integrate_1d(
        |x| Ok(Complex64::from_polar(side_sq_density(x, Radius::UNIT), t * x)),
        0.0,
        4.0,
        &spec,
    )?;
    CharFunValue::from_quadrature(q, "charfun_a2 density route")
}

fn charfun_a2_double(t: f64) -> Result<CharFunValue> {
    let splits = oscillation_splits(0.0, 1.0, t);
    let spec = IntegrationSpec::two_dim().with_tolerances(1e-12, 1e-12).with_splits(splits.clone());
    let q = try_integrate_iterated(
        |u, v| Ok(Complex64::from_polar(jn_unchecked(0, 2.0 * t * (u * v).sqrt()), t * (u + v))),
        (0.0, 1.0),
        |_| (0.0, 1.0),
        |_| splits.clone(),
        &spec,
    )?;
    CharFunValue::from_quadrature(q, "charfun_a2 double integral route")
}

/// Characteristic function `E exp(it a^2)` at unit radius along one route.
pub fn charfun_a2(t: f64, route: CharFunRoute) -> Result<CharFunValue> {
    check_freq(t, MAX_FREQ, "charfun_a2")?;
    if t == 0.0 {
        return Ok(CharFunValue::exact(Complex64::new(1.0, 0.0)));
    }
    match route {
        CharFunRoute::Closed => charfun_a2_closed(t).map(CharFunValue::exact),
        CharFunRoute::Density => charfun_a2_density(t),
        CharFunRoute::DoubleIntegral => charfun_a2_double(t),
    }
}

/// Largest pairwise distance between the values of several routes.
pub fn max_pairwise_deviation(values: &[ComplexScalar]) -> f64 {
    let mut worst = 0.0f64;
    for (k, a) in values.iter().enumerate() {
        for b in &values[k + 1..] {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}

/// Term `n` of the Boersma series with the prefactor folded in.
fn boersma_term(n: u32, t: f64, v: f64, prefactor: Complex64) -> Complex64 {
    let minus_i_pow = match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    let mag = (2 * n + 1) as f64 * j_half_unchecked(n, 0.5 * t) * jn_unchecked(2 * n + 1, 2.0 * t * v.sqrt());
    prefactor * minus_i_pow * mag
}

/// `int_0^1 exp(itu) J0(2t sqrt(uv)) du` by the Boersma series
/// `sqrt(pi) / (t^{3/2} v^{1/2}) exp(it/2) sum_n (-i)^n (2n+1) J_{n+1/2}(t/2) J_{2n+1}(2t sqrt v)`.
pub fn boersma_inner(t: f64, v: f64, trunc: SeriesTruncation) -> Result<ComplexScalar> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("boersma_inner requires t > 0, got {t}")));
    }
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain(format!("boersma_inner requires 0 < v <= 1, got {v}")));
    }
    check_freq(t, MAX_FREQ, "boersma_inner")?;
    let prefactor = Complex64::from_polar(PI.sqrt() / (t.powf(1.5) * v.sqrt()), 0.5 * t);
    let mut sum = Complex64::new(0.0, 0.0);
    // both Bessel factors decay factorially once n exceeds t
    let turning = t.ceil() as usize + 1;
    for n in 0..trunc.max_terms {
        let term = boersma_term(n as u32, t, v, prefactor);
        sum += term;
        if n > turning && term.norm() <= trunc.term_tolerance * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::SeriesConvergence {
        terms: trunc.max_terms,
        partial: sum.norm(),
    })
}

fn inner_spec(t: f64) -> IntegrationSpec {
    IntegrationSpec::one_dim()
        .with_tolerances(1e-14, 1e-13)
        .with_splits(oscillation_splits(0.0, 1.0, t))
}

/// `int_0^1 exp(itu) J0(2t sqrt(uv)) du` by direct quadrature.
pub fn inner_integral_direct(t: f64, v: f64) -> Result<QuadratureResult<ComplexScalar>> {
    check_freq(t, MAX_FREQ, "inner_integral_direct")?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("inner integral requires 0 <= v <= 1, got {v}")));
    }
    try_integrate_1d(
        |u| Ok(Complex64::from_polar(jn_unchecked(0, 2.0 * t * (u * v).sqrt()), t * u)),
        0.0,
        1.0,
        &inner_spec(t),
    )
}

/// `int_0^1 exp(itv) J0(2t sqrt(uv)) dv` with its error estimate.
fn pair_inner(t: f64, u: f64) -> Result<(Complex64, f64)> {
    if t == 0.0 {
        return Ok((Complex64::new(1.0, 0.0), 0.0));
    }
    if t.abs() > BOERSMA_MIN_T && u > 0.0 {
        let b = boersma_inner(t.abs(), u, SeriesTruncation::default())?;
        // the integral at -t is the conjugate of the one at t
        return Ok((if t < 0.0 { b.conj() } else { b }, 1e-15 * b.norm()));
    }
    let q = inner_integral_direct(t, u)?;
    if let Status::NotConverged { .. } = q.status {
        return Err(Error::Setup(format!("inner integral did not converge at t={t}, u={u}")));
    }
    Ok((q.value, q.err_estimate))
}

/// Default outer specification for [`charfun_pair`].
pub fn pair_spec() -> IntegrationSpec {
    IntegrationSpec::one_dim().with_tolerances(1e-13, 1e-12)
}

/// Joint characteristic function `E exp(i(s a^2 + t b^2))` of two sides
/// sharing a vertex, at unit radius:
/// `int_0^1 exp(i(s+t)u) B(s, u) B(t, u) du` with
/// `B(t, u) = int_0^1 exp(itv) J0(2t sqrt(uv)) dv`.
pub fn charfun_pair(args: CharFunArgs, spec: &IntegrationSpec) -> Result<CharFunValue> {
    let CharFunArgs { s, t } = CharFunArgs::new(args.s, args.t)?;
    if s == 0.0 && t == 0.0 {
        return Ok(CharFunValue::exact(Complex64::new(1.0, 0.0)));
    }
    let mut worst_inner = 0.0f64;
    let spec = IntegrationSpec {
        split_points: oscillation_splits(0.0, 1.0, s.abs() + t.abs()),
        ..spec.clone()
    };
    let q = try_integrate_1d(
        |u| {
            let (bs, es) = pair_inner(s, u)?;
            let (bt, et) = pair_inner(t, u)?;
            worst_inner = worst_inner.max(es * bt.norm() + et * bs.norm());
            Ok(Complex64::from_polar(1.0, (s + t) * u) * bs * bt)
        },
        0.0,
        1.0,
        &spec,
    )?;
    let mut out = CharFunValue::from_quadrature(q, "charfun_pair")?;
    out.err_estimate += worst_inner;
    Ok(out)
}

/// Central second difference of [`charfun_pair`] at the origin with step
/// `h`, an estimate of `d^2 g / ds dt = -E(a^2 b^2)`.
pub fn mixed_derivative_at_origin(h: f64, spec: &IntegrationSpec) -> Result<f64> {
    if !(h > 0.0 && h <= 0.1) {
        return Err(Error::Argument(format!("step must be in (0, 0.1], got {h}")));
    }
    let g = |s: f64, t: f64| charfun_pair(CharFunArgs::new(s, t)?, spec).map(|v| v.value);
    let num = g(h, h)? - g(h, -h)? - g(-h, h)? + g(-h, -h)?;
    Ok(num.re / (4.0 * h * h))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::specfun::catalan;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn trunc() -> SeriesTruncation {
        SeriesTruncation::default()
    }

    #[test]
    fn h_at_zero_and_conjugate() {
        assert_eq!(h_closed(0.0).unwrap(), c(1.0, 0.0));
        assert_eq!(h_series(0.0, trunc()).unwrap(), c(1.0, 0.0));
        for t in [0.3, 1.7, 12.0] {
            assert!((h_closed(-t).unwrap() - h_closed(t).unwrap().conj()).norm() < 1e-15);
        }
        assert!(h_closed(50.5).is_err());
        assert!(h_series(5.5, trunc()).is_err());
    }

    #[test]
    fn h_series_matches_closed() {
        let forty = SeriesTruncation::new(40, 1e-17).unwrap_or_default();
        assert!((h_series(0.5, forty).unwrap() - h_closed(0.5).unwrap()).norm() < 1e-12);
        for k in -300..=300 {
            let t = k as f64 / 100.0;
            let d = (h_series(t, trunc()).unwrap() - h_closed(t).unwrap()).norm();
            assert!(d < 1e-12, "t={t}: {d:e}");
        }
    }

    #[test]
    fn series_coefficients_are_catalan_over_factorial() {
        let expected = [(1, 1), (1, 1), (1, 1), (5, 6)];
        for (n, &(p, q)) in expected.iter().enumerate() {
            assert_eq!(h_series_coefficient(n as u32), BigRational::new(p.into(), q.into()));
        }
        for n in 0..=20u32 {
            let fact: BigInt = (1..=n).fold(BigInt::one(), |acc, j| acc * j);
            let want = BigRational::new(BigInt::from(catalan(n).unwrap()), fact);
            assert_eq!(h_series_coefficient(n), want, "n={n}");
        }
    }

    /// `I_k(z)` for complex `z` by its power series.
    fn bessel_i_complex(k: u32, z: Complex64) -> Complex64 {
        let q = z * z * 0.25;
        let mut term = (z * 0.5).powu(k) / (1..=k).map(f64::from).product::<f64>();
        let mut sum = term;
        for m in 1..80 {
            term = term * q / (m as f64 * (m + k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn h_is_the_egf_at_imaginary_argument() {
        // exp(2x)(I0(2x) - I1(2x)) at x = it
        for t in [0.5, 1.0] {
            let z = c(0.0, 2.0 * t);
            let via_i = z.exp() * (bessel_i_complex(0, z) - bessel_i_complex(1, z));
            assert!((via_i - h_closed(t).unwrap()).norm() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn closed_route_reference_values() {
        // mpmath, 30 digits
        let v = charfun_a2(1.0, CharFunRoute::Closed).unwrap().value;
        assert!((v - c(0.443585513669404307, 0.568757055791839234)).norm() < 1e-14);
        let small = charfun_a2(5e-4, CharFunRoute::Closed).unwrap().value;
        let t: f64 = 5e-4;
        let want = c(1.0 - 5.0 / 6.0 * t * t + 0.35 * t.powi(4), t - 7.0 / 12.0 * t * t * t);
        assert!((small - want).norm() < 1e-15);
        // both sides of the switch agree
        let below = charfun_a2(SMALL_T * (1.0 - 1e-9), CharFunRoute::Closed).unwrap().value;
        let above = charfun_a2(SMALL_T * (1.0 + 1e-9), CharFunRoute::Closed).unwrap().value;
        assert!((below - above).norm() < 1e-11);
    }

    #[test]
    fn route_agreement() {
        for t in [0.25, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let vals: Vec<_> = CharFunRoute::ALL
                .iter()
                .map(|&r| charfun_a2(t, r).unwrap().value)
                .collect();
            let d = max_pairwise_deviation(&vals);
            assert!(d < 1e-8, "t={t}: {d:e}");
        }
    }

    #[test]
    fn bound_and_conjugate_symmetry() {
        for route in CharFunRoute::ALL {
            assert_eq!(charfun_a2(0.0, route).unwrap().value, c(1.0, 0.0));
            for t in [0.1, 0.7, 3.0, 8.0] {
                let p = charfun_a2(t, route).unwrap().value;
                let m = charfun_a2(-t, route).unwrap().value;
                assert!(p.norm() <= 1.0 + 1e-12);
                assert!((m - p.conj()).norm() < 1e-10, "{route:?} t={t}");
            }
        }
    }

    #[test]
    fn slope_at_zero_is_second_moment() {
        let h = 1e-4;
        for route in CharFunRoute::ALL {
            let p = charfun_a2(h, route).unwrap().value;
            let m = charfun_a2(-h, route).unwrap().value;
            let slope = (p.im - m.im) / (2.0 * h);
            assert!((slope - 1.0).abs() < 1e-6, "{route:?}: {slope}");
        }
    }

    #[test]
    fn boersma_reference_and_errors() {
        let v = boersma_inner(1.0, 0.5, trunc()).unwrap();
        assert!((v - c(0.664948085714922272, 0.322466840664184573)).norm() < 1e-14);
        assert!(boersma_inner(0.0, 0.5, trunc()).is_err());
        assert!(boersma_inner(-1.0, 0.5, trunc()).is_err());
        assert!(boersma_inner(1.0, 0.0, trunc()).is_err());
        assert!(boersma_inner(1.0, 1.5, trunc()).is_err());
        let short = SeriesTruncation::new(2, 1e-15).unwrap();
        assert!(matches!(boersma_inner(5.0, 0.5, short), Err(Error::SeriesConvergence { .. })));
    }

    #[test]
    fn boersma_tail_decays() {
        let (t, v): (f64, f64) = (1.0, 0.5);
        let pre = Complex64::from_polar(PI.sqrt() / (t.powf(1.5) * v.sqrt()), 0.5 * t);
        let sum: Complex64 = (0..30).map(|n| boersma_term(n, t, v, pre)).sum();
        assert!(boersma_term(30, t, v, pre).norm() / sum.norm() < 1e-15);
    }

    #[test]
    fn boersma_matches_quadrature() {
        for t in [0.5, 1.0, 2.0, 5.0] {
            for v in [0.1, 0.5, 0.9, 1.0] {
                let series = boersma_inner(t, v, trunc()).unwrap();
                let quad = inner_integral_direct(t, v).unwrap();
                assert!(quad.converged());
                assert!((series - quad.value).norm() < 1e-10, "t={t} v={v}");
            }
        }
    }

    #[test]
    fn pair_marginals() {
        let spec = pair_spec();
        let origin = charfun_pair(CharFunArgs::new(0.0, 0.0).unwrap(), &spec).unwrap();
        assert_eq!(origin.value, c(1.0, 0.0));
        for t in [0.3, 1.0, 2.5] {
            let want = charfun_a2(t, CharFunRoute::Closed).unwrap().value;
            let a = charfun_pair(CharFunArgs::new(0.0, t).unwrap(), &spec).unwrap();
            let b = charfun_pair(CharFunArgs::new(t, 0.0).unwrap(), &spec).unwrap();
            assert!((a.value - want).norm() < 1e-8, "t={t}");
            assert!((b.value - want).norm() < 1e-8, "t={t}");
        }
        assert!(CharFunArgs::new(11.0, 0.0).is_err());
    }

    #[test]
    fn pair_symmetry_and_bound() {
        let spec = pair_spec();
        let g = |s, t| charfun_pair(CharFunArgs::new(s, t).unwrap(), &spec).unwrap().value;
        let (s, t) = (0.8, 1.7);
        assert!((g(s, t) - g(t, s)).norm() < 1e-10);
        assert!((g(-s, -t) - g(s, t).conj()).norm() < 1e-10);
        assert!(g(s, t).norm() <= 1.0);
        // the Boersma switch is continuous
        let below = g(0.3, BOERSMA_MIN_T - 1e-12);
        let above = g(0.3, BOERSMA_MIN_T + 1e-12);
        assert!((below - above).norm() < 1e-11);
    }

    #[test]
    fn mixed_derivative() {
        let d = mixed_derivative_at_origin(1e-3, &pair_spec()).unwrap();
        assert!((d + 13.0 / 12.0).abs() < 1e-4, "{d}");
        assert!(mixed_derivative_at_origin(0.0, &pair_spec()).is_err());
    }
}
