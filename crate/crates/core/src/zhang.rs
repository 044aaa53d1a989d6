//! Monte-Carlo simultaneous rank intervals (Zhang et al.).
//!
//! `K` parametric-bootstrap samples `y + σ⊙Z` are drawn and ranked column by
//! column. For a pointwise level `β`, item `i` gets the type-3 quantiles of
//! its simulated ranks at `β/2` and `1 − β/2`. The same samples then estimate
//! the joint probability that a whole simulated rank vector falls inside the
//! pointwise intervals, and `β` is bisected over `(0, α)` for the largest
//! value whose estimate still reaches `1 − α`.
//!
//! Reusing one sample for both steps makes the estimate optimistic. The
//! method is reproduced as published; [`crate::rescale`] corrects its level.
//!
//! Internally each column `k` is reduced to two order-statistic indices
//! `(a_k, b_k)`: the column lies inside the pointwise intervals built from
//! order statistics `(j1, j2)` exactly when `j1 ≤ a_k` and `j2 > b_k`.
//! Coverage at any `β` is then a single pass over `K` pairs.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Method, Observations, RankCiResult, RankInterval, SetRank};
use crate::rng::{self, BLOCK};
use crate::studentized::check_alpha;

pub const DEFAULT_K: usize = 10_000;
pub const MIN_K: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZhangConfig {
    pub alpha: f64,
    /// Simulated samples.
    pub k: usize,
    /// Bisection stops once the `β` bracket is this narrow.
    pub precision: f64,
    pub maxiter: usize,
    pub seed: u64,
}

impl ZhangConfig {
    pub fn new(alpha: f64) -> Self {
        ZhangConfig {
            alpha,
            k: DEFAULT_K,
            precision: 1e-6,
            maxiter: 50,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.k < MIN_K {
            return Err(Error::TooFewSamples {
                required: MIN_K,
                got: self.k,
            });
        }
        if !(self.precision > 0.0) {
            return Err(Error::invalid("bisection precision must be positive"));
        }
        if self.maxiter == 0 {
            return Err(Error::invalid("maxiter must be at least 1"));
        }
        Ok(())
    }

    /// `α·K < 1` leaves no simulated sample to spend on the error rate.
    pub(crate) fn check_resolution(&self) -> Result<()> {
        if self.alpha * (self.k as f64) < 1.0 {
            return Err(Error::ResolutionExhausted {
                alpha: self.alpha,
                k: self.k,
                required_k: (1.0 / self.alpha).ceil() as u64,
            });
        }
        Ok(())
    }
}

/// Simulated samples, one column per draw, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl SimMatrix {
    /// Builds a matrix from explicit columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.first().map(Vec::len).unwrap_or(0);
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("columns must be non-empty and of equal length"));
        }
        Ok(SimMatrix {
            n,
            k: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.k
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.n..(c + 1) * self.n]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n + row]
    }
}

fn fill_block(y: &[f64], sigma: &[f64], seed: u64, block: usize, out: &mut [f64]) {
    let mut rng = rng::stream(seed, block as u64);
    for col in out.chunks_mut(y.len()) {
        for ((v, &m), &s) in col.iter_mut().zip(y).zip(sigma) {
            *v = m + s * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Draws `k` columns `y + σ⊙Z` for observations in input order.
pub fn simulate_matrix(obs: &Observations, k: usize, seed: u64) -> SimMatrix {
    simulate_values(&obs.y(), &obs.sigma(), k, seed)
}

pub(crate) fn simulate_values(y: &[f64], sigma: &[f64], k: usize, seed: u64) -> SimMatrix {
    let n = y.len();
    let mut data = vec![0.0; n * k];
    data.par_chunks_mut(BLOCK * n.max(1))
        .enumerate()
        .for_each(|(b, chunk)| fill_block(y, sigma, seed, b, chunk));
    SimMatrix { n, k, data }
}

/// Hyndman–Fan type-3 order-statistic index (1-based) for `k` sorted values:
/// the nearest order statistic, with exact halves going to the even index.
pub fn type3_index(k: usize, p: f64) -> usize {
    const FUZZ: f64 = 4.0 * f64::EPSILON;
    let h = k as f64 * p - 0.5;
    let j = (h + FUZZ).floor();
    let idx = if h != j || (j as i64) % 2 == 1 { j + 1.0 } else { j };
    idx.clamp(1.0, k as f64) as usize
}

/// Type-3 sample quantile of ascending `sorted_vals`.
pub fn quantile_type3(sorted_vals: &[f64], p: f64) -> Result<f64> {
    if sorted_vals.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(sorted_vals[type3_index(sorted_vals.len(), p) - 1])
}

/// Order-preserving map of `f64` (under `total_cmp`) onto `u64`.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Ranks one column, ties broken by index.
fn rank_column(col: &[f64], keys: &mut [u128], out: &mut [u16]) {
    if col.len() <= 64 && rank_by_counting(col, out) {
        return;
    }
    for (i, (k, &v)) in keys.iter_mut().zip(col).enumerate() {
        *k = (u128::from(ordered_bits(v)) << 64) | i as u128;
    }
    keys.sort_unstable();
    for (pos, &k) in keys.iter().enumerate() {
        out[k as u64 as usize] = (pos + 1) as u16;
    }
}

/// Pairwise counting, which vectorises well for short columns. Returns
/// false when equal values (or signed zeros) leave the ranks ambiguous.
fn rank_by_counting(col: &[f64], out: &mut [u16]) -> bool {
    let mut seen = 0u64;
    for (r, &x) in out.iter_mut().zip(col) {
        let below: u32 = col.iter().map(|&v| u32::from(v < x)).sum();
        *r = below as u16 + 1;
        seen |= 1 << below;
    }
    seen.count_ones() as usize == col.len()
}

/// Per-column simulated ranks with the per-item cumulative rank counts.
#[derive(Debug, Clone)]
pub struct RankTable {
    n: usize,
    k: usize,
    /// Column-major ranks, 1-based.
    ranks: Vec<u16>,
    /// `cum[i*(n+1) + r]` = number of columns where item `i` has rank ≤ `r`.
    cum: Vec<u32>,
    /// Per column: `(min_i cum[i][r_ik], max_i cum[i][r_ik − 1])`.
    summary: Vec<(u32, u32)>,
}

impl RankTable {
    pub fn from_matrix(sim: &SimMatrix) -> Self {
        let n = sim.n;
        let mut ranks = vec![0u16; n * sim.k];
        ranks
            .par_chunks_mut(BLOCK * n)
            .enumerate()
            .for_each(|(b, out)| {
                let mut order = vec![0u128; n];
                for (c, dst) in out.chunks_mut(n).enumerate() {
                    rank_column(sim.column(b * BLOCK + c), &mut order, dst);
                }
            });
        Self::from_ranks(n, sim.k, ranks)
    }

    /// Simulates and ranks without keeping the values; identical to
    /// `from_matrix(&simulate_values(..))`.
    pub(crate) fn simulate(y: &[f64], sigma: &[f64], k: usize, seed: u64) -> Self {
        let n = y.len();
        let mut ranks = vec![0u16; n * k];
        ranks
            .par_chunks_mut(BLOCK * n)
            .enumerate()
            .for_each(|(b, out)| {
                let mut values = vec![0.0; out.len()];
                fill_block(y, sigma, seed, b, &mut values);
                let mut order = vec![0u128; n];
                for (col, dst) in values.chunks(n).zip(out.chunks_mut(n)) {
                    rank_column(col, &mut order, dst);
                }
            });
        Self::from_ranks(n, k, ranks)
    }

    fn from_ranks(n: usize, k: usize, ranks: Vec<u16>) -> Self {
        let width = n + 1;
        let mut cum = ranks
            .par_chunks(BLOCK * n)
            .map(|chunk| {
                let mut hist = vec![0u32; n * width];
                for col in chunk.chunks(n) {
                    for (i, &r) in col.iter().enumerate() {
                        hist[i * width + r as usize] += 1;
                    }
                }
                hist
            })
            .reduce(
                || vec![0u32; n * width],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        for row in cum.chunks_mut(width) {
            for r in 1..width {
                row[r] += row[r - 1];
            }
        }
        let summary = ranks
            .par_chunks(n)
            .map(|col| column_summary(&cum, width, col.iter().map(|&r| (r as usize, r as usize))))
            .collect();
        RankTable {
            n,
            k,
            ranks,
            cum,
            summary,
        }
    }

    pub fn items(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> usize {
        self.k
    }

    /// Rank of item `i` in column `c`.
    pub fn rank(&self, i: usize, c: usize) -> usize {
        self.ranks[c * self.n + i] as usize
    }

    /// The `j`-th smallest (1-based) simulated rank of item `i`.
    fn order_stat(&self, i: usize, j: usize) -> usize {
        let row = &self.cum[i * (self.n + 1)..(i + 1) * (self.n + 1)];
        row.partition_point(|&c| (c as usize) < j)
    }

    fn indices(&self, beta: f64) -> (usize, usize) {
        (
            type3_index(self.k, beta / 2.0),
            type3_index(self.k, 1.0 - beta / 2.0),
        )
    }

    /// Pointwise `1 − β` intervals.
    pub fn pointwise(&self, beta: f64) -> Vec<RankInterval> {
        let (j1, j2) = self.indices(beta);
        (0..self.n)
            .map(|i| RankInterval::new(self.order_stat(i, j1), self.order_stat(i, j2)))
            .collect()
    }

    /// Fraction of simulated columns lying entirely inside the pointwise
    /// `1 − β` intervals.
    pub fn estimated_coverage(&self, beta: f64) -> f64 {
        let (j1, j2) = self.indices(beta);
        let (j1, j2) = (j1 as u32, j2 as u32);
        let inside = self
            .summary
            .par_chunks(BLOCK * 16)
            .map(|s| s.iter().filter(|&&(a, b)| j1 <= a && b < j2).count())
            .sum::<usize>();
        inside as f64 / self.k as f64
    }

    /// Pointwise level at which the bisection of [`zhang_simultaneous_cis`]
    /// would stop covering `truth`, in the limit of infinite bisection
    /// precision: intervals built at level `z` cover `truth` exactly when
    /// `z < critical_level(truth)`.
    ///
    /// The bisection keeps the largest `β` whose estimated coverage reaches
    /// `1 − z`. Walking `β` upward, each column leaves the pointwise region
    /// at a fixed moment, so the truth drops out of the chosen intervals
    /// exactly when `1 − z` exceeds the share of columns still inside at the
    /// moment the truth leaves.
    pub fn critical_level(&self, truth: &[SetRank]) -> f64 {
        debug_assert_eq!(truth.len(), self.n);
        let width = self.n + 1;
        let (a, b) = column_summary(&self.cum, width, truth.iter().map(|t| (t.lower, t.upper)));
        let k = self.k as u64;
        let target = exit_key(k, a, b);
        let earlier = self
            .summary
            .par_chunks(BLOCK * 16)
            .map(|s| s.iter().filter(|&&(a, b)| exit_key(k, a, b) <= target).count())
            .sum::<usize>();
        let by_estimate = earlier as f64 / self.k as f64;
        // β itself never exceeds z, so the truth also stays covered while z
        // is below its own exit point
        let own_exit = (target / 2) as f64 / self.k as f64;
        by_estimate.max(own_exit)
    }
}

fn column_summary<I>(cum: &[u32], width: usize, ranks: I) -> (u32, u32)
where
    I: Iterator<Item = (usize, usize)>,
{
    let mut a = u32::MAX;
    let mut b = 0u32;
    for (i, (lo, hi)) in ranks.enumerate() {
        a = a.min(cum[i * width + lo]);
        b = b.max(cum[i * width + hi - 1]);
    }
    (a, b)
}

/// Moment, in units of `2Kp` with `p = β/2`, at which a column with summary
/// `(a, b)` leaves the pointwise region, encoded as `2·u + open` so that
/// smaller keys leave earlier. The lower bound passes `a` once
/// `Kp − ½ > a`, or at equality when `a` is odd (ties go to the even
/// index); the upper bound drops to `b` once `K(1 − p) − ½ < b`, or at
/// equality when `b` is even.
fn exit_key(k: u64, a: u32, b: u32) -> u64 {
    let (a, b) = (a as u64, b as u64);
    if a == 0 {
        return 0;
    }
    let lower = 2 * (2 * a + 1) + u64::from(a % 2 == 0);
    let upper = match (2 * k).checked_sub(2 * b + 1) {
        Some(u) => 2 * u + u64::from(b % 2 == 1),
        None => 0,
    };
    lower.min(upper)
}

/// Pointwise type-3 intervals at level `1 − β` from a simulated matrix.
pub fn spiegelhalter_pointwise(sim: &SimMatrix, beta: f64) -> Result<Vec<RankInterval>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta must lie in [0, 1], got {beta}")));
    }
    Ok(RankTable::from_matrix(sim).pointwise(beta))
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ZhangFit {
    pub intervals: Vec<RankInterval>,
    pub beta: f64,
    pub coverage: f64,
}

/// The bisection over `β ∈ (0, α)` on a fixed rank table.
pub(crate) fn bisect_beta(table: &RankTable, alpha: f64, precision: f64, maxiter: usize) -> ZhangFit {
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, alpha);
    let mut beta = 0.5 * alpha;
    let mut iter = 0;
    while iter < maxiter && hi - lo > precision {
        if table.estimated_coverage(beta) >= target {
            lo = beta;
        } else {
            hi = beta;
        }
        beta = 0.5 * (lo + hi);
        iter += 1;
    }
    let mut coverage = table.estimated_coverage(beta);
    if coverage < target {
        beta = lo;
        coverage = table.estimated_coverage(beta);
    }
    ZhangFit {
        intervals: table.pointwise(beta),
        beta,
        coverage,
    }
}

pub(crate) fn fit_values(y: &[f64], sigma: &[f64], cfg: &ZhangConfig) -> Result<ZhangFit> {
    cfg.validate()?;
    cfg.check_resolution()?;
    if y.len() == 1 {
        return Ok(ZhangFit {
            intervals: vec![RankInterval::new(1, 1)],
            beta: cfg.alpha,
            coverage: 1.0,
        });
    }
    let table = RankTable::simulate(y, sigma, cfg.k, cfg.seed);
    Ok(bisect_beta(&table, cfg.alpha, cfg.precision, cfg.maxiter))
}

/// Simultaneous `1 − α` rank intervals by Monte-Carlo bisection, in input
/// order.
pub fn zhang_simultaneous_cis(obs: &Observations, cfg: &ZhangConfig) -> Result<RankCiResult> {
    if obs.len() > u16::MAX as usize {
        return Err(Error::invalid("at most 65535 items are supported"));
    }
    let fit = fit_values(&obs.y(), &obs.sigma(), cfg)?;
    Ok(RankCiResult {
        method: Method::Zhang,
        alpha_nominal: cfg.alpha,
        alpha_effective: cfg.alpha,
        intervals: fit.intervals,
        quantile_used: None,
        beta_used: Some(fit.beta),
        estimated_coverage: Some(fit.coverage),
        seed: cfg.seed,
    })
}
