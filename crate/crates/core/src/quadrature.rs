//! Adaptive Gauss-Kronrod integration in one dimension and iterated
//! integration in two, for real and complex integrands.
//!
//! Panels are refined globally: the panel with the largest error estimate is
//! bisected until the summed estimate meets `max(abs_tol, rel_tol * |value|)`.
//! Each panel is integrated with the 10-point Gauss / 21-point Kronrod pair
//! and the difference is rescaled as in QUADPACK.
//!
//! With `smooth_endpoints` set, every segment between consecutive split
//! points is mapped through `t = a + (b - a)(3s^2 - 2s^3)`. The Jacobian
//! vanishes at both ends, which turns square-root behavior at a segment end
//! into an analytic integrand. The densities in this crate all have such
//! behavior along the edges of their support regions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values an integrand may return.
pub trait QuadValue:
    Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn is_finite(&self) -> bool {
        Complex64::is_finite(*self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections of any one panel.
    pub max_depth: u32,
    /// Interior breakpoints; each becomes a panel boundary.
    pub split_points: Vec<f64>,
    pub smooth_endpoints: bool,
    /// Upper bound on the number of panels held at once.
    pub max_panels: usize,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        IntegrationSpec::one_dim()
    }
}

impl IntegrationSpec {
    /// Defaults for one-dimensional integrals.
    pub fn one_dim() -> Self {
        IntegrationSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 60,
            split_points: Vec::new(),
            smooth_endpoints: false,
            max_panels: 2000,
        }
    }

    /// Defaults for the outer level of two-dimensional integrals.
    pub fn two_dim() -> Self {
        IntegrationSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            ..IntegrationSpec::one_dim()
        }
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_splits(mut self, split_points: Vec<f64>) -> Self {
        self.split_points = split_points;
        self
    }

    pub fn with_smoothing(mut self, on: bool) -> Self {
        self.smooth_endpoints = on;
        self
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    fn validate(&self, lo: f64, hi: f64) -> Result<()> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Setup(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Setup(format!(
                "tolerances must be positive, got abs={} rel={}",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_depth == 0 || self.max_panels == 0 {
            return Err(Error::Setup("max_depth and max_panels must be at least 1".into()));
        }
        if let Some(p) = self.split_points.iter().find(|&&p| !(p > lo && p < hi)) {
            return Err(Error::Setup(format!(
                "split point {p} is not strictly inside [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Converged,
    /// Refinement stopped before the tolerance was met; the coordinates
    /// locate the panel (and, for iterated integrals, the inner point)
    /// responsible.
    NotConverged { x: f64, y: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<V> {
    pub value: V,
    pub err_estimate: f64,
    pub n_evals: usize,
    pub status: Status,
}

impl<V> QuadratureResult<V> {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const EVALS_PER_PANEL: usize = 21;

struct PanelEstimate<V> {
    value: V,
    err: f64,
}

// One GK21 application on [a, b] with the error rescaling of QUADPACK.
fn gk21<V, F>(f: &mut F, a: f64, b: f64) -> Result<PanelEstimate<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center)?;
    let mut kron = fc * WGK[10];
    let mut gauss = V::zero();
    let mut res_abs = fc.norm() * WGK[10];
    let mut lower = [V::zero(); 10];
    let mut upper = [V::zero(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        lower[j] = f1;
        upper[j] = f2;
        kron = kron + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).norm();
    for j in 0..10 {
        res_asc += WGK[j] * ((lower[j] - mean).norm() + (upper[j] - mean).norm());
    }
    let scale = half.abs();
    let value = kron * half;
    let res_abs = res_abs * scale;
    let res_asc = res_asc * scale;

    let mut err = ((kron - gauss) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(PanelEstimate { value, err })
}

#[derive(Debug, Clone, Copy)]
struct Panel<V> {
    segment: usize,
    lo: f64,
    hi: f64,
    depth: u32,
    value: V,
    err: f64,
}

struct ByError<V>(Panel<V>);

impl<V> PartialEq for ByError<V> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<V> Eq for ByError<V> {}
impl<V> PartialOrd for ByError<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for ByError<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so refinement order is fully determined
        self.0
            .err
            .total_cmp(&other.0.err)
            .then_with(|| other.0.segment.cmp(&self.0.segment))
            .then_with(|| other.0.lo.total_cmp(&self.0.lo))
    }
}

/// A segment `[a, b]` of the original interval, possibly reparametrized
/// over `s` in `[0, 1]`.
#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    smooth: bool,
}

impl Segment {
    fn domain(&self) -> (f64, f64) {
        if self.smooth {
            (0.0, 1.0)
        } else {
            (self.a, self.b)
        }
    }

    fn map(&self, s: f64) -> (f64, f64) {
        if self.smooth {
            let w = self.b - self.a;
            (self.a + w * s * s * (3.0 - 2.0 * s), w * 6.0 * s * (1.0 - s))
        } else {
            (s, 1.0)
        }
    }

    fn original(&self, s: f64) -> f64 {
        self.map(s).0
    }
}

/// Integrate a fallible integrand over `[lo, hi]`. Integrand errors abort
/// the integration; non-finite values abort with [`Error::NonFinite`].
pub fn try_integrate_1d<V, F>(mut f: F, lo: f64, hi: f64, spec: &IntegrationSpec) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    spec.validate(lo, hi)?;
    let mut cuts = spec.split_points.clone();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(lo);
    bounds.extend(cuts);
    bounds.push(hi);
    let segments: Vec<Segment> = bounds
        .windows(2)
        .map(|w| Segment {
            a: w[0],
            b: w[1],
            smooth: spec.smooth_endpoints,
        })
        .collect();

    let mut n_evals = 0usize;
    let mut eval_panel = |seg: usize, s_lo: f64, s_hi: f64, n_evals: &mut usize| -> Result<PanelEstimate<V>> {
        let segment = segments[seg];
        *n_evals += EVALS_PER_PANEL;
        let mut g = |s: f64| -> Result<V> {
            let (x, jac) = segment.map(s);
            if jac == 0.0 {
                return Ok(V::zero());
            }
            let v = f(x)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { x, y: None });
            }
            Ok(v * jac)
        };
        gk21(&mut g, s_lo, s_hi)
    };

    let mut heap = BinaryHeap::new();
    for (i, seg) in segments.iter().enumerate() {
        let (s_lo, s_hi) = seg.domain();
        let est = eval_panel(i, s_lo, s_hi, &mut n_evals)?;
        heap.push(ByError(Panel {
            segment: i,
            lo: s_lo,
            hi: s_hi,
            depth: 0,
            value: est.value,
            err: est.err,
        }));
    }

    let mut status = Status::Converged;
    loop {
        let (total, total_err) = totals(&heap);
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.norm()) {
            break;
        }
        let worst = heap.peek().expect("at least one panel").0;
        let mid = 0.5 * (worst.lo + worst.hi);
        let seg = segments[worst.segment];
        if worst.depth >= spec.max_depth || heap.len() >= spec.max_panels || !(worst.lo < mid && mid < worst.hi) {
            status = Status::NotConverged {
                x: seg.original(mid),
                y: None,
            };
            break;
        }
        heap.pop();
        for (a, b) in [(worst.lo, mid), (mid, worst.hi)] {
            let est = eval_panel(worst.segment, a, b, &mut n_evals)?;
            heap.push(ByError(Panel {
                segment: worst.segment,
                lo: a,
                hi: b,
                depth: worst.depth + 1,
                value: est.value,
                err: est.err,
            }));
        }
    }

    // sum in position order so the result does not depend on heap layout
    let mut panels: Vec<Panel<V>> = heap.into_iter().map(|p| p.0).collect();
    panels.sort_by(|p, q| p.segment.cmp(&q.segment).then(p.lo.total_cmp(&q.lo)));
    let mut value = V::zero();
    let mut err = 0.0;
    for p in &panels {
        value = value + p.value;
        err += p.err;
    }
    Ok(QuadratureResult {
        value,
        err_estimate: err,
        n_evals,
        status,
    })
}

fn totals<V: QuadValue>(heap: &BinaryHeap<ByError<V>>) -> (V, f64) {
    heap.iter().fold((V::zero(), 0.0), |(v, e), p| (v + p.0.value, e + p.0.err))
}

/// Integrate an infallible integrand over `[lo, hi]`.
pub fn integrate_1d<V, F>(mut f: F, lo: f64, hi: f64, spec: &IntegrationSpec) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    try_integrate_1d(|x| Ok(f(x)), lo, hi, spec)
}

/// Kink lines of the bivariate side density on `[0, 2R]^2`. Enabled lines
/// become panel boundaries of both the inner and the outer integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkLines {
    /// `y = x`
    pub diagonal: bool,
    /// `x + y = 2R`
    pub anti_diagonal: bool,
    /// `x = R` and `y = R`
    pub midlines: bool,
    pub radius: f64,
}

impl KinkLines {
    pub fn none() -> Self {
        KinkLines {
            diagonal: false,
            anti_diagonal: false,
            midlines: false,
            radius: 1.0,
        }
    }

    /// Every line along which the bivariate density changes form.
    pub fn all(radius: f64) -> Self {
        KinkLines {
            diagonal: true,
            anti_diagonal: true,
            midlines: true,
            radius,
        }
    }

    /// Breakpoints of the inner integral over `y` at fixed `x`.
    fn inner_splits(&self, x: f64) -> Vec<f64> {
        let mut v = Vec::new();
        if self.diagonal {
            v.push(x);
        }
        if self.anti_diagonal {
            v.push(2.0 * self.radius - x);
        }
        if self.midlines {
            v.push(self.radius);
        }
        v
    }

    /// Breakpoints of the outer integral: where lines cross each other or
    /// leave the inner range.
    fn outer_splits(&self, y_range: (f64, f64)) -> Vec<f64> {
        let two_r = 2.0 * self.radius;
        let mut v = Vec::new();
        if self.diagonal {
            v.extend([y_range.0, y_range.1]);
        }
        if self.anti_diagonal {
            v.extend([two_r - y_range.0, two_r - y_range.1]);
        }
        if (self.diagonal && self.anti_diagonal) || self.midlines {
            v.push(self.radius);
        }
        v
    }
}

/// Keep the points strictly inside `(lo, hi)`, sorted and without
/// near-duplicates.
pub fn interior_points(points: impl IntoIterator<Item = f64>, lo: f64, hi: f64) -> Vec<f64> {
    let guard = 1e-12 * (hi - lo).abs().max(1.0);
    let mut v: Vec<f64> = points
        .into_iter()
        .filter(|&p| p > lo + guard && p < hi - guard)
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= guard);
    v
}

/// Breakpoints at the multiples of `pi / |freq|` inside `(lo, hi)` when
/// `|freq| > 4`, so each panel spans at most one half period of
/// `exp(i freq x)`.
pub fn oscillation_splits(lo: f64, hi: f64, freq: f64) -> Vec<f64> {
    let w = freq.abs();
    if !(w > 4.0) || !w.is_finite() {
        return Vec::new();
    }
    let step = PI / w;
    let first = (lo / step).floor() as i64 + 1;
    let mut v = Vec::new();
    let mut k = first;
    loop {
        let p = k as f64 * step;
        if p >= hi {
            break;
        }
        v.push(p);
        k += 1;
    }
    interior_points(v, lo, hi)
}

/// Iterated integral `int_{x_lo}^{x_hi} int_{y_lo(x)}^{y_hi(x)} f(x, y) dy dx`.
///
/// `inner_splits(x)` may return any candidate breakpoints; those outside the
/// inner range are dropped. The inner tolerance is derived from `outer` so
/// that the inner errors, integrated over x, stay a tenth of the target.
/// The returned error estimate is the outer estimate plus the largest inner
/// estimate times the outer width.
pub fn try_integrate_iterated<V, F, B, S>(
    f: F,
    x_range: (f64, f64),
    y_bounds: B,
    inner_splits: S,
    outer: &IntegrationSpec,
) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: Fn(f64, f64) -> Result<V>,
    B: Fn(f64) -> (f64, f64),
    S: Fn(f64) -> Vec<f64>,
{
    let width = x_range.1 - x_range.0;
    let inner_base = IntegrationSpec {
        abs_tol: 0.1 * outer.abs_tol / width.abs().max(f64::MIN_POSITIVE),
        rel_tol: 0.1 * outer.rel_tol,
        split_points: Vec::new(),
        ..outer.clone()
    };
    let mut inner_evals = 0usize;
    let mut worst_inner = 0.0f64;
    let mut inner_failure: Option<(f64, f64)> = None;

    let outer_result = try_integrate_1d(
        |x| {
            let (lo, hi) = y_bounds(x);
            if !(hi > lo) {
                return Ok(V::zero());
            }
            let spec = IntegrationSpec {
                split_points: interior_points(inner_splits(x), lo, hi),
                ..inner_base.clone()
            };
            let r = try_integrate_1d(|y| f(x, y), lo, hi, &spec).map_err(|e| match e {
                Error::NonFinite { x: y, .. } => Error::NonFinite { x, y: Some(y) },
                other => other,
            })?;
            inner_evals += r.n_evals;
            worst_inner = worst_inner.max(r.err_estimate);
            if let (Status::NotConverged { x: y, .. }, None) = (r.status, inner_failure) {
                inner_failure = Some((x, y));
            }
            Ok(r.value)
        },
        x_range.0,
        x_range.1,
        outer,
    )?;

    let status = match (outer_result.status, inner_failure) {
        (Status::Converged, None) => Status::Converged,
        (_, Some((x, y))) => Status::NotConverged { x, y: Some(y) },
        (s, None) => s,
    };
    Ok(QuadratureResult {
        value: outer_result.value,
        err_estimate: outer_result.err_estimate + worst_inner * width.abs(),
        n_evals: inner_evals,
        status,
    })
}

/// Two-dimensional integral over a rectangle with panel boundaries placed
/// on the enabled kink lines. `spec.split_points` adds outer breakpoints.
pub fn try_integrate_2d<V, F>(
    f: F,
    x_range: (f64, f64),
    y_range: (f64, f64),
    spec: &IntegrationSpec,
    kinks: KinkLines,
) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: Fn(f64, f64) -> Result<V>,
{
    if !(y_range.0.is_finite() && y_range.1.is_finite() && y_range.0 < y_range.1) {
        return Err(Error::Setup(format!("need finite y_lo < y_hi, got {y_range:?}")));
    }
    let candidates = kinks
        .outer_splits(y_range)
        .into_iter()
        .chain(spec.split_points.iter().copied());
    let outer = IntegrationSpec {
        split_points: interior_points(candidates, x_range.0, x_range.1),
        ..spec.clone()
    };
    try_integrate_iterated(f, x_range, |_| y_range, |x| kinks.inner_splits(x), &outer)
}

/// Infallible variant of [`try_integrate_2d`].
pub fn integrate_2d<V, F>(
    f: F,
    x_range: (f64, f64),
    y_range: (f64, f64),
    spec: &IntegrationSpec,
    kinks: KinkLines,
) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: Fn(f64, f64) -> V,
{
    try_integrate_2d(|x, y| Ok(f(x, y)), x_range, y_range, spec, kinks)
}
