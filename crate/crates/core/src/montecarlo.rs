//! Reproducible Monte Carlo sampling of uniform triangles in the disk.
//!
//! Samples are drawn in fixed blocks of [`BLOCK_SIZE`] triangles; block `k`
//! uses ChaCha8 stream `k` under the run seed. Chunks only decide which
//! blocks a worker thread handles. Per-block accumulators are merged in
//! block order, so a run is bit-identical for any chunk count and any
//! thread pool size.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::densities::pair_density;
use crate::domain::{Point, Radius, TriangleSample};
use crate::error::{Error, Result};

pub const BLOCK_SIZE: u64 = 1 << 16;

/// One reproducible random stream: `(seed, stream_index)` fully determines
/// the sequence, and distinct indices give independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        RngStream {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw from `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Map two unit uniforms to a uniform point of the disk: radius `R sqrt(u)`,
/// angle `2 pi v`.
pub fn point_from_uniforms(u: f64, v: f64, r: Radius) -> Point {
    let rho = r.get() * u.sqrt();
    let (s, c) = (2.0 * PI * v).sin_cos();
    Point::new(rho * c, rho * s)
}

pub fn sample_point(rng: &mut RngStream, r: Radius) -> Point {
    let u = rng.next_unit();
    let v = rng.next_unit();
    point_from_uniforms(u, v, r)
}

/// Vertices A, B, C are drawn in that order; `a = |BC|`, `b = |CA|`,
/// `c = |AB|`.
pub fn sample_triangle(rng: &mut RngStream, r: Radius) -> TriangleSample {
    let va = sample_point(rng, r);
    let vb = sample_point(rng, r);
    let vc = sample_point(rng, r);
    TriangleSample::from_vertices(va, vb, vc)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const POW: usize = 5;

/// Power sums `sum a^i b^j` for `i, j <= 4` and `sum p^k` for `k <= 4`.
#[derive(Debug, Clone)]
struct Accumulator {
    n: u64,
    ab: [[CompensatedSum; POW]; POW],
    perim: [CompensatedSum; POW],
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            n: 0,
            ab: [[CompensatedSum::default(); POW]; POW],
            perim: [CompensatedSum::default(); POW],
        }
    }

    fn push(&mut self, t: &TriangleSample) {
        self.n += 1;
        let pa = powers(t.a);
        let pb = powers(t.b);
        for (i, row) in self.ab.iter_mut().enumerate() {
            for (j, s) in row.iter_mut().enumerate() {
                if i + j > 0 {
                    s.add(pa[i] * pb[j]);
                }
            }
        }
        let pp = powers(t.perimeter());
        for (k, s) in self.perim.iter_mut().enumerate().skip(1) {
            s.add(pp[k]);
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        for i in 0..POW {
            for j in 0..POW {
                self.ab[i][j].merge(&other.ab[i][j]);
            }
        }
        for k in 0..POW {
            self.perim[k].merge(&other.perim[k]);
        }
    }

    fn raw_ab(&self, i: usize, j: usize) -> f64 {
        if i + j == 0 {
            1.0
        } else {
            self.ab[i][j].value() / self.n as f64
        }
    }

    /// `E[(a - E a)^i (b - E b)^j]` from the raw moments.
    fn central_ab(&self, i: usize, j: usize) -> f64 {
        let ma = self.raw_ab(1, 0);
        let mb = self.raw_ab(0, 1);
        let mut total = 0.0;
        for k in 0..=i {
            for l in 0..=j {
                total += binom(i, k) * binom(j, l) * self.raw_ab(k, l) * (-ma).powi((i - k) as i32) * (-mb).powi((j - l) as i32);
            }
        }
        total
    }

    fn raw_perim(&self, k: usize) -> f64 {
        self.perim[k].value() / self.n as f64
    }
}

#[inline]
fn powers(v: f64) -> [f64; POW] {
    let v2 = v * v;
    [1.0, v, v2, v2 * v, v2 * v2]
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Distance from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target) / self.std_error
    }
}

/// Sample moments of the side lengths, each with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub mean_a: Estimate,
    pub mean_a2: Estimate,
    pub mean_ab: Estimate,
    pub mean_perim: Estimate,
    pub var_perim: Estimate,
    pub mean_a2b2: Estimate,
    pub corr_ab: Estimate,
    pub n: u64,
    pub seed: u64,
    pub chunks: usize,
}

impl MomentEstimates {
    /// Name/estimate pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, Estimate); 7] {
        [
            ("mean_a", self.mean_a),
            ("mean_a2", self.mean_a2),
            ("mean_ab", self.mean_ab),
            ("mean_perim", self.mean_perim),
            ("var_perim", self.var_perim),
            ("mean_a2b2", self.mean_a2b2),
            ("corr_ab", self.corr_ab),
        ]
    }
}

fn block_ranges(n: u64) -> Vec<(u64, u64)> {
    let blocks = n.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .map(|k| (k, BLOCK_SIZE.min(n - k * BLOCK_SIZE)))
        .collect()
}

/// Run `per_block` on every block, spread over `chunks` contiguous groups,
/// and return the block results in block order.
fn run_blocks<T, F>(n: u64, chunks: usize, per_block: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    let blocks = block_ranges(n);
    let group = blocks.len().div_ceil(chunks.max(1)).max(1);
    blocks
        .par_chunks(group)
        .map(|grp| grp.iter().map(|&(k, len)| per_block(k, len)).collect::<Vec<T>>())
        .collect::<Vec<Vec<T>>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Estimate the side-length moments from `n` triangles.
pub fn estimate_moments(n: u64, seed: u64, chunks: usize, r: Radius) -> Result<MomentEstimates> {
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 samples, got {n}")));
    }
    if chunks == 0 {
        return Err(Error::Argument("chunks must be at least 1".into()));
    }
    let partials = run_blocks(n, chunks, |k, len| {
        let mut rng = RngStream::new(seed, k);
        let mut acc = Accumulator::new();
        for _ in 0..len {
            acc.push(&sample_triangle(&mut rng, r));
        }
        acc
    });
    let mut acc = Accumulator::new();
    for p in &partials {
        acc.merge(p);
    }
    Ok(summarize(&acc, seed, chunks))
}

fn summarize(acc: &Accumulator, seed: u64, chunks: usize) -> MomentEstimates {
    let nf = acc.n as f64;
    // mean of a quantity q with E q = m1 and E q^2 = m2
    let mean = |m1: f64, m2: f64| Estimate {
        value: m1,
        std_error: ((m2 - m1 * m1).max(0.0) / (nf - 1.0)).sqrt(),
    };

    let mean_a = mean(acc.raw_ab(1, 0), acc.raw_ab(2, 0));
    let mean_a2 = mean(acc.raw_ab(2, 0), acc.raw_ab(4, 0));
    let mean_ab = mean(acc.raw_ab(1, 1), acc.raw_ab(2, 2));
    let mean_a2b2 = mean(acc.raw_ab(2, 2), acc.raw_ab(4, 4));
    let p1 = acc.raw_perim(1);
    let mean_perim = mean(p1, acc.raw_perim(2));

    let (p2, p3, p4) = (acc.raw_perim(2), acc.raw_perim(3), acc.raw_perim(4));
    let var_p = p2 - p1 * p1;
    let mu4 = p4 - 4.0 * p3 * p1 + 6.0 * p2 * p1 * p1 - 3.0 * p1.powi(4);
    let var_perim = Estimate {
        value: var_p * nf / (nf - 1.0),
        // delta method: Var(s^2) ~ (mu4 - sigma^4) / n
        std_error: ((mu4 - var_p * var_p).max(0.0) / nf).sqrt(),
    };

    let sa2 = acc.central_ab(2, 0);
    let sb2 = acc.central_ab(0, 2);
    let (sa, sb) = (sa2.sqrt(), sb2.sqrt());
    let rho = acc.central_ab(1, 1) / (sa * sb);
    // variance of the influence function za zb - rho (za^2 + zb^2) / 2
    let z22 = acc.central_ab(2, 2) / (sa2 * sb2);
    let z31 = acc.central_ab(3, 1) / (sa2 * sa * sb);
    let z13 = acc.central_ab(1, 3) / (sa * sb2 * sb);
    let z40 = acc.central_ab(4, 0) / (sa2 * sa2);
    let z04 = acc.central_ab(0, 4) / (sb2 * sb2);
    let var_if = z22 - rho * (z31 + z13) + 0.25 * rho * rho * (z40 + 2.0 * z22 + z04);
    let corr_ab = Estimate {
        value: rho,
        std_error: (var_if.max(0.0) / nf).sqrt(),
    };

    MomentEstimates {
        mean_a,
        mean_a2,
        mean_ab,
        mean_perim,
        var_perim,
        mean_a2b2,
        corr_ab,
        n: acc.n,
        seed,
        chunks,
    }
}

/// Counts of `(a, b)` pairs on a `bins x bins` grid over `[0, 2R]^2`;
/// `counts[i * bins + j]` holds `a` in bin `i` and `b` in bin `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairHistogram {
    pub bins: usize,
    pub radius: f64,
    pub counts: Vec<u64>,
}

impl PairHistogram {
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.bins + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.radius / self.bins as f64
    }

    /// L1 distance between the empirical cell frequencies and the cell
    /// probabilities of [`pair_density`], integrated by a 4x4 Gauss rule per
    /// cell.
    pub fn l1_distance_to_density(&self) -> Result<f64> {
        const NODES: [f64; 4] = [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526];
        const WEIGHTS: [f64; 4] = [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538];
        let r = Radius::new(self.radius)?;
        let h = self.bin_width();
        let total = self.total() as f64;
        let mut dist = 0.0;
        for i in 0..self.bins {
            for j in 0..self.bins {
                let (cx, cy) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                let mut p = 0.0;
                for (nx, wx) in NODES.iter().zip(WEIGHTS) {
                    for (ny, wy) in NODES.iter().zip(WEIGHTS) {
                        p += wx * wy * pair_density(cx + 0.5 * h * nx, cy + 0.5 * h * ny, r)?;
                    }
                }
                p *= 0.25 * h * h;
                dist += (self.count(i, j) as f64 / total - p).abs();
            }
        }
        Ok(dist)
    }
}

pub fn pair_histogram(n: u64, seed: u64, bins: usize, r: Radius) -> Result<PairHistogram> {
    if bins < 2 {
        return Err(Error::Argument(format!("need at least 2 bins, got {bins}")));
    }
    let scale = bins as f64 / (2.0 * r.get());
    let index = |v: f64| ((v * scale) as usize).min(bins - 1);
    let threads = rayon::current_num_threads();
    let partials = run_blocks(n, threads, |k, len| {
        let mut rng = RngStream::new(seed, k);
        let mut counts = vec![0u64; bins * bins];
        for _ in 0..len {
            let t = sample_triangle(&mut rng, r);
            counts[index(t.a) * bins + index(t.b)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; bins * bins];
    for p in partials {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    Ok(PairHistogram {
        bins,
        radius: r.get(),
        counts,
    })
}
