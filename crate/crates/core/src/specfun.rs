//! Special functions: Bessel J of integer and half-integer order, modified
//! Bessel I0/I1, and Catalan numbers with their exponential generating
//! function.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_INTEGER_ORDER: u32 = 300;
pub const MAX_HALF_ORDER: u32 = 200;
pub const MAX_BESSEL_ARG: f64 = 200.0;
pub const MAX_CATALAN_INDEX: u32 = 30;
pub const MAX_EGF_ARG: f64 = 20.0;

/// Truncation control for the power and Bessel series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTruncation {
    pub max_terms: usize,
    /// A term smaller than this fraction of the running sum ends the series.
    pub term_tolerance: f64,
}

impl SeriesTruncation {
    pub fn new(max_terms: usize, term_tolerance: f64) -> Result<Self> {
        if max_terms == 0 {
            return Err(Error::Argument("max_terms must be at least 1".into()));
        }
        if !(term_tolerance > 0.0) {
            return Err(Error::Argument(format!(
                "term_tolerance must be positive, got {term_tolerance}"
            )));
        }
        Ok(SeriesTruncation {
            max_terms,
            term_tolerance,
        })
    }
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        SeriesTruncation {
            max_terms: 200,
            term_tolerance: 1e-15,
        }
    }
}

/// Bessel function of the first kind `J_n(x)` of integer order.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    if n > MAX_INTEGER_ORDER || !(x.abs() <= MAX_BESSEL_ARG) {
        return Err(Error::Range(format!(
            "bessel_j requires n <= {MAX_INTEGER_ORDER} and |x| <= {MAX_BESSEL_ARG}, got n={n}, x={x}"
        )));
    }
    Ok(jn_unchecked(n, x))
}

/// `J_n(x)` without range checks. Orders above the public limit are used by
/// the Bessel series of the characteristic-function module.
pub(crate) fn jn_unchecked(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ax = x.abs();
    let v = if ax <= 1.0 {
        jn_series(n, ax)
    } else {
        jn_miller(n, ax)
    };
    if x < 0.0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

// sum_m (-1)^m (x/2)^(2m+n) / (m! (m+n)!), for 0 < x <= 1
fn jn_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= half / k as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..60u32 {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

// Downward recurrence from a start index well past both n and x, normalized
// with J0 + 2 * sum_k J_2k = 1.
fn jn_miller(n: u32, x: f64) -> f64 {
    let big = x.max(n as f64);
    let mut start = (big + 30.0 + 6.0 * big.sqrt()).ceil() as u32;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut wanted = 0.0;
    let mut k = start;
    loop {
        if k == n {
            wanted = cur;
        }
        if k.is_multiple_of(2) {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    wanted / norm
}

/// Bessel function of half-integer order `J_{n+1/2}(x)` for `x > 0`.
pub fn bessel_j_half(n: u32, x: f64) -> Result<f64> {
    if n > MAX_HALF_ORDER {
        return Err(Error::Range(format!(
            "bessel_j_half requires n <= {MAX_HALF_ORDER}, got {n}"
        )));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_j_half requires finite x > 0, got {x}"
        )));
    }
    Ok(j_half_unchecked(n, x))
}

pub(crate) fn j_half_unchecked(n: u32, x: f64) -> f64 {
    (2.0 * x / PI).sqrt() * spherical_jn(n, x)
}

/// Spherical Bessel function `j_n(x)` for `x > 0`.
fn spherical_jn(n: u32, x: f64) -> f64 {
    if x < 1.0 {
        return spherical_jn_series(n, x);
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if n == 0 {
        return j0;
    }
    let j1 = s / (x * x) - c / x;
    if (n as f64) <= x {
        // upward recurrence is stable below the turning point
        let (mut prev, mut cur) = (j0, j1);
        for k in 1..n {
            let nxt = (2 * k + 1) as f64 / x * cur - prev;
            prev = cur;
            cur = nxt;
        }
        return cur;
    }
    let start = n + 30 + (6.0 * (n as f64).sqrt()) as u32;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut wanted = 0.0;
    let mut at_one = 0.0;
    let mut k = start;
    loop {
        if k == n {
            wanted = cur;
        }
        if k == 1 {
            at_one = cur;
        }
        if k == 0 {
            break;
        }
        let prev = (2 * k + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            wanted *= 1e-250;
            at_one *= 1e-250;
        }
    }
    // normalize on whichever of j0, j1 is further from a zero
    if j0.abs() >= j1.abs() {
        wanted * (j0 / cur)
    } else {
        wanted * (j1 / at_one)
    }
}

// j_n(x) = x^n / (2n+1)!! * sum_m (-x^2/2)^m / (m! (2n+3)(2n+5)...(2n+2m+1))
fn spherical_jn_series(n: u32, x: f64) -> f64 {
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= x / (2 * k + 1) as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..40u32 {
        term *= q / (m as f64 * (2 * n + 2 * m + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// Modified Bessel function `I_k(x)` for `k` in {0, 1}.
pub fn bessel_i(k: u32, x: f64) -> Result<f64> {
    if k > 1 {
        return Err(Error::Range(format!("bessel_i supports k = 0 or 1, got {k}")));
    }
    if !(x.abs() <= MAX_BESSEL_ARG) {
        return Err(Error::Range(format!(
            "bessel_i requires |x| <= {MAX_BESSEL_ARG}, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let half = 0.5 * x.abs();
    let q = half * half;
    let mut term = if k == 0 { 1.0 } else { half };
    let mut sum = term;
    let mut m = 1u32;
    loop {
        term *= q / (m as f64 * (m + k) as f64);
        sum += term;
        // all terms are positive; stop once past the peak and negligible
        if (m as f64) > half && term < 1e-17 * sum {
            break;
        }
        m += 1;
    }
    Ok(if k == 1 && x < 0.0 { -sum } else { sum })
}

/// Catalan number `binom(2n, n) / (n + 1)`.
pub fn catalan(n: u32) -> Result<u64> {
    if n > MAX_CATALAN_INDEX {
        return Err(Error::Range(format!(
            "catalan is exact only for n <= {MAX_CATALAN_INDEX}, got {n}"
        )));
    }
    // C_{k+1} = C_k * 2(2k+1) / (k+2), exact at every step
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    Ok(c as u64)
}

/// Truncated exponential generating function `sum_n C_n t^n / n!`, which
/// equals `exp(2t) (I0(2t) - I1(2t))`.
pub fn catalan_egf(t: f64, trunc: SeriesTruncation) -> Result<f64> {
    if !(t.abs() <= MAX_EGF_ARG) {
        return Err(Error::Range(format!(
            "catalan_egf requires |t| <= {MAX_EGF_ARG}, got {t}"
        )));
    }
    catalan_series(t, trunc, false).map(|(re, _)| re)
}

/// Sums `sum_n C_n t^n / n!` in double-double arithmetic. With `rotate`
/// the n-th term is multiplied by `i^n`, giving `sum_n C_n (it)^n / n!` as
/// (re, im). Terms of alternating sign grow to ~1e5 before decaying at
/// |t| = 5, so plain double summation cannot reach 1e-12.
pub(crate) fn catalan_series(t: f64, trunc: SeriesTruncation, rotate: bool) -> Result<(f64, f64)> {
    let mut term = DoubleDouble::from(1.0);
    let mut re = DoubleDouble::from(1.0);
    let mut im = DoubleDouble::from(0.0);
    let peak = 4.0 * t.abs();
    for n in 1..trunc.max_terms {
        let nf = n as f64;
        // C_n / (n C_{n-1}) = 2(2n-1) / (n(n+1))
        term = term.mul_f64(t).mul_f64(2.0 * (2.0 * nf - 1.0)).div_f64(nf * (nf + 1.0));
        let signed = if rotate && n % 4 >= 2 { -term } else { term };
        if rotate && n % 2 == 1 {
            im = im + signed;
        } else {
            re = re + signed;
        }
        let size = re.hi.hypot(im.hi);
        if nf > peak && term.hi.abs() <= trunc.term_tolerance * size {
            return Ok((re.to_f64(), im.to_f64()));
        }
    }
    if t == 0.0 {
        return Ok((1.0, 0.0));
    }
    Err(Error::SeriesConvergence {
        terms: trunc.max_terms,
        partial: re.to_f64().hypot(im.to_f64()),
    })
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }
}

impl DoubleDouble {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> DoubleDouble {
        let s = a + b;
        DoubleDouble {
            hi: s,
            lo: b - (s - a),
        }
    }

    fn mul_f64(self, b: f64) -> DoubleDouble {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Self::quick_two_sum(p, e + self.lo * b)
    }

    fn div_f64(self, b: f64) -> DoubleDouble {
        let q1 = self.hi / b;
        // remainder self - q1 * b, computed exactly in the leading part
        let p = q1 * b;
        let pe = q1.mul_add(b, -p);
        let (s, e) = Self::two_sum(self.hi, -p);
        let r = s + (e - pe + self.lo);
        let q2 = r / b;
        Self::quick_two_sum(q1, q2)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl std::ops::Add for DoubleDouble {
    type Output = DoubleDouble;

    fn add(self, b: DoubleDouble) -> DoubleDouble {
        let (s, e) = Self::two_sum(self.hi, b.hi);
        let (t, f) = Self::two_sum(self.lo, b.lo);
        let r = Self::quick_two_sum(s, e + t);
        Self::quick_two_sum(r.hi, r.lo + f)
    }
}

impl std::ops::Neg for DoubleDouble {
    type Output = DoubleDouble;

    fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}
