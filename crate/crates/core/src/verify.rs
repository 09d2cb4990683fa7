//! The verification suite: every numbered check with its tolerance.
//!
//! Checks run in declaration order. `Level::Quick` multiplies every
//! tolerance by ten and uses 10^6 Monte Carlo samples; `Level::Full` uses
//! the stated tolerances and 10^7 samples.

use std::f64::consts::PI;
use std::time::Instant;

use num_rational::Ratio;
use serde::Serialize;

use crate::charfun::{
    boersma_inner, charfun_a2, h_closed, h_series, h_series_coefficient, inner_integral_direct, max_pairwise_deviation,
    mixed_derivative_at_origin, pair_spec, CharFunRoute,
};
use crate::densities::{
    kernel_spec, pair_density, pair_density_subcase_oracle, phi, psi, side_density, subcase_index,
};
use crate::domain::Radius;
use crate::error::{Error, Result};
use crate::moments::{
    cube_integral_exact, expected_pair_product, expected_side, expected_side_sq, expected_sq_pair_product,
    perimeter_stats_from, reference, side_normalization,
};
use crate::montecarlo::estimate_moments;
use crate::quadrature::{interior_points, try_integrate_1d, try_integrate_2d, IntegrationSpec, KinkLines, QuadratureResult};
use crate::specfun::{catalan, SeriesTruncation};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    /// Factor applied to every tolerance.
    pub fn relax(self) -> f64 {
        match self {
            Level::Quick => 10.0,
            Level::Full => 1.0,
        }
    }

    pub fn mc_samples(self) -> u64 {
        match self {
            Level::Quick => 1_000_000,
            Level::Full => 10_000_000,
        }
    }
}

/// One compared quantity: the check passes when `deviation <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub label: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Measurement {
    fn new(label: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Measurement {
            label: label.into(),
            deviation,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CheckOutcome {
    /// Single-line summary naming the worst measurement.
    pub fn summary_line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let detail = match (&self.error, self.worst()) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(m)) => format!("{}: deviation {:.3e} <= {:.1e}", m.label, m.deviation, m.tolerance)
                .replace("<=", if m.passed() { "<=" } else { ">" }),
            (None, None) => "no measurements".into(),
        };
        format!("[{tag}] {:>2} {:<34} {detail} ({:.1} s)", self.id, self.name, self.seconds)
    }

    /// The measurement closest to (or furthest past) its tolerance.
    pub fn worst(&self) -> Option<&Measurement> {
        let ratio = |m: &Measurement| {
            if m.tolerance > 0.0 {
                m.deviation / m.tolerance
            } else if m.deviation == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        self.measurements.iter().max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
    }
}

type CheckFn = fn(Level) -> Result<Vec<Measurement>>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    run: CheckFn,
}

impl Criterion {
    pub fn run(&self, level: Level) -> CheckOutcome {
        let start = Instant::now();
        let (measurements, error) = match (self.run)(level) {
            Ok(m) => (m, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let passed = error.is_none() && !measurements.is_empty() && measurements.iter().all(Measurement::passed);
        CheckOutcome {
            id: self.id,
            name: self.name,
            passed,
            measurements,
            error,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

const CRITERIA: [Criterion; 16] = [
    Criterion { id: 1, name: "univariate normalization", run: check_side_normalization },
    Criterion { id: 2, name: "E(a)", run: check_expected_side },
    Criterion { id: 3, name: "E(a^2)", run: check_expected_side_sq },
    Criterion { id: 4, name: "bivariate normalization", run: check_pair_normalization },
    Criterion { id: 5, name: "E(ab)", run: check_pair_product },
    Criterion { id: 6, name: "correlation rho(a,b)", run: check_correlation },
    Criterion { id: 7, name: "perimeter second moment, variance", run: check_perimeter },
    Criterion { id: 8, name: "E(a^2 b^2) two routes", run: check_sq_pair_product },
    Criterion { id: 9, name: "subcase oracle equivalence", run: check_oracle_grid },
    Criterion { id: 10, name: "boundary continuity", run: check_continuity },
    Criterion { id: 11, name: "marginalization", run: check_marginals },
    Criterion { id: 12, name: "charfun route agreement", run: check_charfun_routes },
    Criterion { id: 13, name: "Catalan identity", run: check_catalan },
    Criterion { id: 14, name: "Boersma series", run: check_boersma },
    Criterion { id: 15, name: "Monte Carlo concordance", run: check_monte_carlo },
    Criterion { id: 16, name: "mixed derivative at origin", run: check_mixed_derivative },
];

pub fn criteria() -> &'static [Criterion] {
    &CRITERIA
}

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

/// Run every check in declaration order.
pub fn run_all(level: Level) -> Vec<CheckOutcome> {
    CRITERIA.iter().map(|c| c.run(level)).collect()
}

fn check_side_normalization(level: Level) -> Result<Vec<Measurement>> {
    let rep = side_normalization()?;
    Ok(vec![Measurement::new("int f", (rep.value - 1.0).abs(), 1e-10 * level.relax())])
}

fn check_expected_side(level: Level) -> Result<Vec<Measurement>> {
    let rep = expected_side(Radius::UNIT)?;
    let closed = 128.0 / (45.0 * PI);
    Ok(vec![Measurement::new("E(a) - 128/(45 pi)", (rep.value - closed).abs(), 1e-10 * level.relax())])
}

fn check_expected_side_sq(level: Level) -> Result<Vec<Measurement>> {
    let rep = expected_side_sq(Radius::UNIT)?;
    Ok(vec![Measurement::new("E(a^2) - 1", (rep.value - 1.0).abs(), 1e-10 * level.relax())])
}

/// Total mass of a candidate bivariate density over `[0, 2]^2`.
pub fn bivariate_mass<F>(density: F) -> Result<QuadratureResult<f64>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    try_integrate_2d(
        density,
        (0.0, 2.0),
        (0.0, 2.0),
        &IntegrationSpec::two_dim().with_tolerances(1e-11, 1e-11),
        KinkLines::all(1.0),
    )
}

fn check_pair_normalization(level: Level) -> Result<Vec<Measurement>> {
    mass_measurement(|x, y| pair_density(x, y, Radius::UNIT), level)
}

fn mass_measurement<F>(density: F, level: Level) -> Result<Vec<Measurement>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let q = bivariate_mass(density)?;
    Ok(vec![Measurement::new("int int f", (q.value - 1.0).abs(), 1e-8 * level.relax())])
}

fn check_pair_product(level: Level) -> Result<Vec<Measurement>> {
    let rep = expected_pair_product(Radius::UNIT)?;
    Ok(vec![Measurement::new("E(ab) - reference", (rep.value - reference::E_AB).abs(), 1e-8 * level.relax())])
}

fn check_correlation(level: Level) -> Result<Vec<Measurement>> {
    let stats = perimeter_stats_from(&expected_pair_product(Radius::UNIT)?, Radius::UNIT)?;
    let rho = stats.correlation.value;
    Ok(vec![Measurement::new("rho - reference", (rho - reference::CORR_AB).abs(), 1e-7 * level.relax())])
}

fn check_perimeter(level: Level) -> Result<Vec<Measurement>> {
    let stats = perimeter_stats_from(&expected_pair_product(Radius::UNIT)?, Radius::UNIT)?;
    Ok(vec![
        Measurement::new(
            "E(perimeter^2) - reference",
            (stats.second_moment.value - reference::E_PERIMETER_SQ).abs(),
            6e-8 * level.relax(),
        ),
        Measurement::new(
            "Var(perimeter) - reference",
            (stats.variance.value - reference::VAR_PERIMETER).abs(),
            1e-7 * level.relax(),
        ),
    ])
}

fn check_sq_pair_product(level: Level) -> Result<Vec<Measurement>> {
    let sq = expected_sq_pair_product(Radius::UNIT)?;
    let exact_gap = if cube_integral_exact() == Ratio::new(13, 12) { 0.0 } else { 1.0 };
    Ok(vec![
        Measurement::new("quadrature - 13/12", (sq.quadrature.value - 13.0 / 12.0).abs(), 1e-8 * level.relax()),
        Measurement::new("cube integral != 13/12 (exact)", exact_gap, 0.0),
    ])
}

fn check_oracle_grid(level: Level) -> Result<Vec<Measurement>> {
    let n = 20;
    let mut worst = 0.0f64;
    let mut seen = [false; 6];
    for i in 0..n {
        for j in 0..n {
            let x = 2.0 * (i as f64 + 0.5) / n as f64;
            let y = 2.0 * (j as f64 + 0.5) / n as f64;
            if let Some(k) = subcase_index(x, y, Radius::UNIT) {
                seen[k as usize - 1] = true;
                let oracle = pair_density_subcase_oracle(x, y, Radius::UNIT, &kernel_spec())?;
                worst = worst.max((pair_density(x, y, Radius::UNIT)? - oracle).abs());
            }
        }
    }
    let missing = seen.iter().filter(|s| !**s).count() as f64;
    Ok(vec![
        Measurement::new("max |closed - oracle| on 20x20 grid", worst, 1e-8 * level.relax()),
        Measurement::new("subcases not covered", missing, 0.0),
    ])
}

fn check_continuity(level: Level) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for x in [1.1, 1.35, 1.6, 1.9] {
        let y = 2.0 - x;
        worst = worst.max((phi(x, y, Radius::UNIT)? - psi(x, y, Radius::UNIT)?).abs());
    }
    Ok(vec![Measurement::new("max |phi - psi| on x + y = 2", worst, 1e-8 * level.relax())])
}

fn check_marginals(level: Level) -> Result<Vec<Measurement>> {
    let base = IntegrationSpec::one_dim().with_tolerances(1e-12, 1e-11).with_smoothing(true);
    let mut worst = 0.0f64;
    for x in [0.25, 0.75, 1.0, 1.5, 1.9] {
        let spec = base.clone().with_splits(interior_points([x, 2.0 - x, 1.0], 0.0, 2.0));
        let q = try_integrate_1d(|y| pair_density(x, y, Radius::UNIT), 0.0, 2.0, &spec)?;
        worst = worst.max((q.value - side_density(x, Radius::UNIT)).abs());
    }
    Ok(vec![Measurement::new("max |int f(x, .) - f(x)|", worst, 1e-7 * level.relax())])
}

fn check_charfun_routes(level: Level) -> Result<Vec<Measurement>> {
    let mut out = Vec::new();
    for t in [0.25, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let vals = CharFunRoute::ALL
            .iter()
            .map(|&r| charfun_a2(t, r).map(|v| v.value))
            .collect::<Result<Vec<_>>>()?;
        out.push(Measurement::new(format!("t={t}: max route gap"), max_pairwise_deviation(&vals), 1e-8 * level.relax()));
    }
    Ok(out)
}

fn check_catalan(level: Level) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for k in -300..=300 {
        let t = k as f64 / 100.0;
        worst = worst.max((h_series(t, SeriesTruncation::default())? - h_closed(t)?).norm());
    }
    let mut mismatched = 0.0;
    for n in 0..=20u32 {
        let fact: BigInt = (1..=n).fold(BigInt::one(), |acc, j| acc * j);
        if h_series_coefficient(n) != BigRational::new(BigInt::from(catalan(n)?), fact) {
            mismatched += 1.0;
        }
    }
    Ok(vec![
        Measurement::new("max |h_series - h_closed|, |t| <= 3", worst, 1e-12 * level.relax()),
        Measurement::new("coefficients != C_n/n! (exact, n <= 20)", mismatched, 0.0),
    ])
}

fn check_boersma(level: Level) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0, 5.0] {
        for v in [0.1, 0.5, 0.9, 1.0] {
            let quad = inner_integral_direct(t, v)?;
            if !quad.converged() {
                return Err(Error::Setup(format!("inner integral did not converge at t={t}, v={v}")));
            }
            worst = worst.max((boersma_inner(t, v, SeriesTruncation::default())? - quad.value).norm());
        }
    }
    Ok(vec![Measurement::new("max |series - quadrature| on 4x4 grid", worst, 1e-10 * level.relax())])
}

fn check_monte_carlo(level: Level) -> Result<Vec<Measurement>> {
    let n = level.mc_samples();
    let est = estimate_moments(n, 1, 1, Radius::UNIT)?;
    let e_ab = expected_pair_product(Radius::UNIT)?;
    let stats = perimeter_stats_from(&e_ab, Radius::UNIT)?;
    let sq = expected_sq_pair_product(Radius::UNIT)?;
    let k = 3.0 * level.relax();
    let z = |label: &str, mc: crate::montecarlo::Estimate, target: f64| {
        Measurement::new(format!("{label}: |z|"), mc.z_score(target).abs(), k)
    };
    let mut out = vec![
        z("E(a)", est.mean_a, 128.0 / (45.0 * PI)),
        z("E(ab)", est.mean_ab, e_ab.value),
        z("Var(perimeter)", est.var_perim, stats.variance.value),
        z("E(a^2 b^2)", est.mean_a2b2, sq.quadrature.value),
        z("rho(a,b)", est.corr_ab, stats.correlation.value),
    ];
    let chunked = estimate_moments(n, 1, 8, Radius::UNIT)?;
    let differing = est
        .entries()
        .iter()
        .zip(chunked.entries())
        .filter(|(a, b)| a.1.value.to_bits() != b.1.value.to_bits() || a.1.std_error.to_bits() != b.1.std_error.to_bits())
        .count();
    out.push(Measurement::new("estimates differing, 8 vs 1 chunks", differing as f64, 0.0));
    Ok(out)
}

fn check_mixed_derivative(level: Level) -> Result<Vec<Measurement>> {
    let d = mixed_derivative_at_origin(1e-3, &pair_spec())?;
    Ok(vec![Measurement::new("second difference + 13/12", (d + 13.0 / 12.0).abs(), 1e-4 * level.relax())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::pair_density_mutated;

    #[test]
    fn ids_are_sequential() {
        for (k, c) in criteria().iter().enumerate() {
            assert_eq!(c.id as usize, k + 1);
        }
        assert!(criterion(16).is_some() && criterion(17).is_none());
    }

    #[test]
    fn flipped_sqrt_fails_normalization() {
        let good = mass_measurement(|x, y| pair_density(x, y, Radius::UNIT), Level::Quick).unwrap();
        assert!(good[0].passed());
        let bad = mass_measurement(pair_density_mutated, Level::Quick).unwrap();
        assert!(!bad[0].passed(), "{bad:?}");
    }

    #[test]
    fn summary_names_failures() {
        let outcome = CheckOutcome {
            id: 4,
            name: "bivariate normalization",
            passed: false,
            measurements: vec![Measurement::new("int int f", 0.5, 1e-8), Measurement::new("other", 0.0, 1.0)],
            error: None,
            seconds: 0.1,
        };
        let line = outcome.summary_line();
        assert!(line.starts_with("[FAIL]") && line.contains("int int f") && line.contains('>'), "{line}");
    }

    #[test]
    fn cheap_checks_pass_at_full_level() {
        for id in [1, 2, 3, 10, 13, 14] {
            let out = criterion(id).unwrap().run(Level::Full);
            assert!(out.passed, "{}", out.summary_line());
        }
    }
}
