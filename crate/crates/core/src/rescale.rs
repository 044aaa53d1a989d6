//! Coverage estimation and worst-case rescaling of the nominal level.
//!
//! Both rank-interval methods miss their nominal level when the means are
//! close together: Tukey intervals over-cover, Monte-Carlo intervals
//! under-cover. The smallest coverage occurs for means that are all
//! (arbitrarily close to) zero yet distinct, which is simulated as `μ = 0`
//! with true ranks `1..n`. Rescaling finds the level `α̃` whose coverage at
//! that configuration is `1 − α`; intervals built at `α̃` then cover with
//! probability at least `1 − α` everywhere else too.
//!
//! All levels tried by the search share the same simulated data sets, so
//! the estimated coverage is a deterministic step function of the level.
//! Each data set is reduced to a single critical value beyond which its
//! intervals stop covering, which makes every step of the search a count.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{all_equal, covers_all, identity_ranks, set_ranks, Method, SetRank};
use crate::rng::{self, StreamRng};
use crate::settings::MethodSettings;
use crate::studentized::{check_alpha, CriticalValues, QuantileMethod};
use crate::tukey::rank_bounds;
use crate::zhang::{fit_values, RankTable};

pub const MIN_REPLICATES: usize = 100;
pub const DEFAULT_REPLICATES: usize = 10_000;
/// Largest `n` for which [`brute_force_orderings`] enumerates every arrangement.
pub const MAX_BRUTE_FORCE: usize = 7;

const TAG_QUANTILE: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_SAMPLES: u64 = 3;

/// A Monte-Carlo coverage probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub p_hat: f64,
    pub replicates: usize,
    pub std_error: f64,
    pub seed: u64,
}

impl CoverageEstimate {
    pub fn from_hits(hits: usize, replicates: usize, seed: u64) -> Self {
        let p = hits as f64 / replicates as f64;
        CoverageEstimate {
            p_hat: p,
            replicates,
            std_error: (p * (1.0 - p) / replicates as f64).sqrt(),
            seed,
        }
    }

    pub fn hits(&self) -> usize {
        (self.p_hat * self.replicates as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKind {
    Ascending,
    /// Small `σ` at both ends, the largest in the middle.
    TreeMiddleMax,
    /// Large `σ` at both ends, the smallest in the middle.
    TreeMiddleMin,
    Custom,
}

/// An arrangement of standard deviations over the rank positions of a
/// (near) zero mean vector. `permutation[k]` is the index of the `σ` placed
/// at position `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaOrdering {
    pub kind: OrderingKind,
    pub permutation: Vec<usize>,
}

fn ascending_indices(sigma: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sigma.len()).collect();
    idx.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    idx
}

/// Places `order[0]` at the right end, `order[1]` at the left end, and so on
/// inwards; the last entry lands at position `⌈n/2⌉`.
fn ends_inward(order: &[usize]) -> Vec<usize> {
    let n = order.len();
    let mut out = vec![0; n];
    let (mut left, mut right) = (0, n);
    for (k, &i) in order.iter().enumerate() {
        if k % 2 == 0 {
            right -= 1;
            out[right] = i;
        } else {
            out[left] = i;
            left += 1;
        }
    }
    out
}

impl SigmaOrdering {
    pub fn ascending(sigma: &[f64]) -> Self {
        SigmaOrdering {
            kind: OrderingKind::Ascending,
            permutation: ascending_indices(sigma),
        }
    }

    pub fn tree_middle_max(sigma: &[f64]) -> Self {
        SigmaOrdering {
            kind: OrderingKind::TreeMiddleMax,
            permutation: ends_inward(&ascending_indices(sigma)),
        }
    }

    pub fn tree_middle_min(sigma: &[f64]) -> Self {
        let mut desc = ascending_indices(sigma);
        desc.reverse();
        SigmaOrdering {
            kind: OrderingKind::TreeMiddleMin,
            permutation: ends_inward(&desc),
        }
    }

    pub fn custom(permutation: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; permutation.len()];
        for &i in &permutation {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("ordering is not a permutation"));
            }
        }
        Ok(SigmaOrdering {
            kind: OrderingKind::Custom,
            permutation,
        })
    }

    pub fn of_kind(kind: OrderingKind, sigma: &[f64]) -> Result<Self> {
        match kind {
            OrderingKind::Ascending => Ok(Self::ascending(sigma)),
            OrderingKind::TreeMiddleMax => Ok(Self::tree_middle_max(sigma)),
            OrderingKind::TreeMiddleMin => Ok(Self::tree_middle_min(sigma)),
            OrderingKind::Custom => Err(Error::invalid("a custom ordering needs an explicit permutation")),
        }
    }

    pub fn apply(&self, sigma: &[f64]) -> Vec<f64> {
        self.permutation.iter().map(|&i| sigma[i]).collect()
    }
}

impl std::str::FromStr for OrderingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ascending" => Ok(OrderingKind::Ascending),
            "tree_middle_max" => Ok(OrderingKind::TreeMiddleMax),
            "tree_middle_min" => Ok(OrderingKind::TreeMiddleMin),
            other => Err(Error::invalid(format!("unknown ordering `{other}`"))),
        }
    }
}

/// The arrangement with the lowest coverage at `μ = 0` found so far:
/// small `σ` at the extreme ranks and large `σ` in the middle. Equal `σ`
/// give the identity.
pub fn worst_case_sigma_ordering(sigma: &[f64]) -> SigmaOrdering {
    if all_equal(sigma) {
        return SigmaOrdering {
            kind: OrderingKind::TreeMiddleMax,
            permutation: (0..sigma.len()).collect(),
        };
    }
    SigmaOrdering::tree_middle_max(sigma)
}

fn draw_y(rng: &mut StreamRng, mu: &[f64], sigma: &[f64]) -> Vec<f64> {
    mu.iter()
        .zip(sigma)
        .map(|(&m, &s)| m + s * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn check_inputs(mu: &[f64], sigma: &[f64], replicates: usize) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::EmptyInput);
    }
    if mu.len() != sigma.len() {
        return Err(Error::invalid("mean and sigma vectors differ in length"));
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::TooFewSamples {
            required: MIN_REPLICATES,
            got: replicates,
        });
    }
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::non_finite("mean vector"));
    }
    if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::NonPositiveSigma {
            id: "sigma".into(),
            sigma: *s,
        });
    }
    Ok(())
}

fn tukey_quantiles(sigma: &[f64], settings: &MethodSettings, seed: u64) -> Result<CriticalValues> {
    CriticalValues::new(
        sigma,
        QuantileMethod::Auto,
        settings.tukey_samples,
        rng::derive(seed, TAG_QUANTILE),
    )
}

/// Simultaneous coverage at `mu` against its tie-aware true ranks.
pub fn coverage_at(
    mu: &[f64],
    sigma: &[f64],
    level: f64,
    settings: &MethodSettings,
    replicates: usize,
    seed: u64,
) -> Result<CoverageEstimate> {
    let truth = set_ranks(mu)?;
    coverage_with_truth(mu, sigma, &truth, level, settings, replicates, seed)
}

/// Simultaneous coverage at `mu` against explicitly supplied true ranks,
/// e.g. `1..n` for the zero vector read as distinct means.
pub fn coverage_with_truth(
    mu: &[f64],
    sigma: &[f64],
    truth: &[SetRank],
    level: f64,
    settings: &MethodSettings,
    replicates: usize,
    seed: u64,
) -> Result<CoverageEstimate> {
    check_inputs(mu, sigma, replicates)?;
    check_alpha(level)?;
    if truth.len() != mu.len() {
        return Err(Error::invalid("true ranks and means differ in length"));
    }
    let data_seed = rng::derive(seed, TAG_DATA);
    let hits = match settings.method {
        Method::Tukey => {
            let q = tukey_quantiles(sigma, settings, seed)?.quantile(level)?;
            rng::count_replicates(data_seed, replicates, |r, _| {
                let y = draw_y(r, mu, sigma);
                covers_all(&rank_bounds(&y, sigma, q), truth)
            })
        }
        Method::Zhang => {
            let sample_seed = rng::derive(seed, TAG_SAMPLES);
            // surfaces configuration errors before the loop
            let probe = settings.zhang_config(level, 0);
            probe.validate()?;
            probe.check_resolution()?;
            let outcomes = rng::map_replicates(data_seed, replicates, |r, i| {
                let y = draw_y(r, mu, sigma);
                let cfg = settings.zhang_config(level, rng::derive(sample_seed, i as u64));
                fit_values(&y, sigma, &cfg).map(|fit| covers_all(&fit.intervals, truth))
            });
            let mut hits = 0;
            for o in outcomes {
                hits += usize::from(o?);
            }
            hits
        }
    };
    Ok(CoverageEstimate::from_hits(hits, replicates, seed))
}

/// Smallest Tukey critical value whose intervals for `y` cover `truth`.
///
/// With `t_ij = (y_i − y_j)/s_ij`, the lower bound of item `i` stays at or
/// below `l_i` while fewer than `l_i` of the `t_ij` exceed `q`, i.e. while
/// `q` is at least the `l_i`-th largest `t_ij`; the upper bound mirrors this
/// with `−t_ij` and `n − u_i + 1`.
pub(crate) fn tukey_threshold(y: &[f64], sigma: &[f64], truth: &[SetRank]) -> f64 {
    let n = y.len();
    let mut need: f64 = 0.0;
    let mut t = Vec::with_capacity(n);
    for i in 0..n {
        t.clear();
        t.extend((0..n).filter(|&j| j != i).map(|j| {
            (y[i] - y[j]) / (sigma[i] * sigma[i] + sigma[j] * sigma[j]).sqrt()
        }));
        t.sort_unstable_by(|a, b| b.total_cmp(a));
        let above = truth[i].lower;
        if above <= t.len() {
            need = need.max(t[above - 1]);
        }
        let below = n - truth[i].upper + 1;
        if below <= t.len() {
            need = need.max(-t[t.len() - below]);
        }
    }
    need
}

/// Result of a worst-case rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub method: Method,
    pub alpha: f64,
    pub alpha_tilde: f64,
    /// Coverage at `μ = 0` at `alpha_tilde` on the shared data sets.
    pub achieved: CoverageEstimate,
    pub ordering: SigmaOrdering,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Final bracket width: absolute for Tukey (default `1e-4`), relative
    /// to the bracket for the Monte-Carlo method (default `1e-3`), whose
    /// `α̃` can sit orders of magnitude below `α`.
    pub tol: Option<f64>,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        RescaleConfig {
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            tol: None,
        }
    }
}

/// Bisects a nonincreasing step function `cov` on `(lo, hi)` for the last
/// point where it still reaches `target`.
fn bisect_level<F: FnMut(f64) -> Result<usize>>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    target: usize,
    mut hits: F,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if hits(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Level `α̃` at which simultaneous coverage at the worst-case configuration
/// equals `1 − α`. `σ` is rearranged by [`worst_case_sigma_ordering`].
pub fn rescale_alpha(sigma: &[f64], alpha: f64, settings: &MethodSettings, cfg: &RescaleConfig) -> Result<Rescaled> {
    check_alpha(alpha)?;
    let n = sigma.len();
    if n < 2 {
        return Err(Error::TooFewItems { required: 2, got: n });
    }
    let zero = vec![0.0; n];
    check_inputs(&zero, sigma, cfg.replicates)?;
    let ordering = worst_case_sigma_ordering(sigma);
    let sigma = ordering.apply(sigma);
    let truth = identity_ranks(n);
    let replicates = cfg.replicates;
    // smallest hit count that still meets 1 − α
    let target = ((1.0 - alpha) * replicates as f64 - 1e-9).ceil() as usize;
    let data_seed = rng::derive(cfg.seed, TAG_DATA);

    let (alpha_tilde, hits) = match settings.method {
        Method::Tukey => {
            let tol = cfg.tol.unwrap_or(1e-4);
            let quantiles = tukey_quantiles(&sigma, settings, cfg.seed)?;
            let mut need = rng::map_replicates(data_seed, replicates, |r, _| {
                let y = draw_y(r, &zero, &sigma);
                tukey_threshold(&y, &sigma, &truth)
            });
            need.sort_by(f64::total_cmp);
            let count = |z: f64| -> Result<usize> {
                let q = quantiles.quantile(z)?;
                Ok(need.partition_point(|&c| c <= q))
            };
            let z = bisect_level(alpha, 1.0, tol, target, count)?;
            (z, count(z)?)
        }
        Method::Zhang => {
            let rel = cfg.tol.unwrap_or(1e-3);
            let probe = settings.zhang_config(alpha, 0);
            probe.validate()?;
            let sample_seed = rng::derive(cfg.seed, TAG_SAMPLES);
            let mut crit = rng::map_replicates(data_seed, replicates, |r, i| {
                let y = draw_y(r, &zero, &sigma);
                RankTable::simulate(&y, &sigma, settings.zhang_k, rng::derive(sample_seed, i as u64))
                    .critical_level(&truth)
            });
            crit.sort_by(f64::total_cmp);
            let count = |z: f64| -> Result<usize> { Ok(replicates - crit.partition_point(|&c| c <= z)) };
            let k = settings.zhang_k;
            let exhausted = |z: f64| Error::ResolutionExhausted {
                alpha: z,
                k,
                required_k: if z > 0.0 { (1.0 / z).ceil() as u64 } else { 10 * k as u64 },
            };
            // α̃ may lie orders of magnitude below α: halve down to a
            // passing level, then bisect geometrically
            let floor = 0.1 / k as f64;
            let (mut lo, mut hi) = (0.5 * alpha, alpha);
            while count(lo)? < target {
                hi = lo;
                lo *= 0.5;
                if lo < floor {
                    return Err(exhausted(0.0));
                }
            }
            while hi - lo > rel * lo {
                let mid = (lo * hi).sqrt();
                if count(mid)? >= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = lo;
            if z * (k as f64) < 1.0 {
                return Err(exhausted(z));
            }
            (z, count(z)?)
        }
    };
    Ok(Rescaled {
        method: settings.method,
        alpha,
        alpha_tilde,
        achieved: CoverageEstimate::from_hits(hits, replicates, cfg.seed),
        ordering,
    })
}

/// Coverage along the ray `ε·mu_base`. The same data sets are reused at
/// every `ε`; at `ε = 0` the true ranks are taken as `1..n`.
pub fn epsilon_sweep(
    mu_base: &[f64],
    sigma: &[f64],
    alpha: f64,
    grid: &[f64],
    settings: &MethodSettings,
    replicates: usize,
    seed: u64,
) -> Result<Vec<(f64, CoverageEstimate)>> {
    if grid.is_empty() {
        return Err(Error::invalid("empty epsilon grid"));
    }
    grid.iter()
        .map(|&eps| {
            let mu: Vec<f64> = mu_base.iter().map(|m| eps * m).collect();
            let truth = if eps == 0.0 {
                identity_ranks(mu.len())
            } else {
                set_ranks(&mu)?
            };
            let est = coverage_with_truth(&mu, sigma, &truth, alpha, settings, replicates, seed)?;
            Ok((eps, est))
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                extend(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Coverage at `μ = 0` (true ranks `1..n`) for every arrangement of `σ` up
/// to reversal, lowest coverage first. Limited to `n ≤ 7`.
pub fn brute_force_orderings(
    sigma: &[f64],
    level: f64,
    settings: &MethodSettings,
    replicates: usize,
    seed: u64,
) -> Result<Vec<(SigmaOrdering, CoverageEstimate)>> {
    let n = sigma.len();
    if n > MAX_BRUTE_FORCE {
        return Err(Error::invalid(format!(
            "exhaustive ordering search is limited to {MAX_BRUTE_FORCE} items, got {n}"
        )));
    }
    let zero = vec![0.0; n];
    let truth = identity_ranks(n);
    let mut out = Vec::new();
    for perm in permutations(n) {
        let mirrored: Vec<usize> = perm.iter().rev().copied().collect();
        if mirrored < perm {
            continue;
        }
        let ordering = SigmaOrdering::custom(perm)?;
        let est = coverage_with_truth(&zero, &ordering.apply(sigma), &truth, level, settings, replicates, seed)?;
        out.push((ordering, est));
    }
    out.sort_by(|a, b| a.1.p_hat.total_cmp(&b.1.p_hat));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::studentized::quantile_exact_equal_sigma;
    use proptest::prelude::*;

    #[test]
    fn tree_orderings_shape() {
        let sigma: Vec<f64> = (1..=10).rev().map(|k| 1.0 / k as f64).collect();
        let mid_max = SigmaOrdering::tree_middle_max(&sigma).apply(&sigma);
        assert!(mid_max[..5].windows(2).all(|w| w[0] <= w[1]));
        assert!(mid_max[4..].windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(mid_max[4], 1.0);
        assert!(mid_max[0].min(mid_max[9]) == 0.1);
        let mid_min = SigmaOrdering::tree_middle_min(&sigma).apply(&sigma);
        assert!(mid_min[..5].windows(2).all(|w| w[0] >= w[1]));
        assert!(mid_min[4..].windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(mid_min[4], 0.1);
        let asc = SigmaOrdering::ascending(&sigma).apply(&sigma);
        assert!(asc.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn three_items_ends_inward() {
        let (a, b, c) = (0.2, 0.5, 0.9);
        let ord = worst_case_sigma_ordering(&[c, a, b]);
        assert_eq!(ord.apply(&[c, a, b]), vec![b, c, a]);
        assert_eq!(worst_case_sigma_ordering(&[1.0; 4]).permutation, vec![0, 1, 2, 3]);
    }

    #[test]
    fn custom_ordering_must_be_bijection() {
        assert!(SigmaOrdering::custom(vec![0, 0, 1]).is_err());
        assert!(SigmaOrdering::custom(vec![0, 3, 1]).is_err());
        assert!(SigmaOrdering::custom(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn full_null_tukey_is_exact() {
        // tied means: every true rank set is [1, n]
        let est = coverage_at(&[0.0; 6], &[1.0; 6], 0.2, &MethodSettings::tukey(), 20_000, 4).unwrap();
        assert!((est.p_hat - 0.8).abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn separated_means_always_covered() {
        let mu: Vec<f64> = (0..8).map(|i| 100.0 * i as f64).collect();
        let est = coverage_at(&mu, &[1.0; 8], 0.1, &MethodSettings::tukey(), 500, 1).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn coverage_rejects_bad_input() {
        let t = MethodSettings::tukey();
        assert!(coverage_at(&[0.0; 3], &[1.0; 3], 0.1, &t, 10, 0).is_err());
        assert!(coverage_at(&[0.0; 3], &[1.0; 2], 0.1, &t, 1000, 0).is_err());
        assert!(coverage_at(&[0.0; 3], &[1.0, 0.0, 1.0], 0.1, &t, 1000, 0).is_err());
        let z = MethodSettings::zhang().with_zhang_k(1000);
        assert!(matches!(
            coverage_at(&[0.0; 3], &[1.0; 3], 1e-4, &z, 100, 0),
            Err(Error::ResolutionExhausted { .. })
        ));
    }

    #[test]
    fn threshold_matches_direct_tukey_counts() {
        let truth = identity_ranks(6);
        let mut r = rng::stream(8, 0);
        for _ in 0..300 {
            let sigma: Vec<f64> = (0..6).map(|_| 0.2 + rand::Rng::random::<f64>(&mut r)).collect();
            let y = draw_y(&mut r, &[0.0; 6], &sigma);
            let c = tukey_threshold(&y, &sigma, &truth);
            for q in [0.0, 0.5, 1.0, 2.0, 3.0, 4.5] {
                if (q - c).abs() > 1e-9 {
                    assert_eq!(covers_all(&rank_bounds(&y, &sigma, q), &truth), c <= q);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn threshold_for_tied_truth(mu in prop::collection::vec(-2i32..2, 2..7), seed in 0u64..1000) {
            let mu: Vec<f64> = mu.into_iter().map(f64::from).collect();
            let truth = set_ranks(&mu).unwrap();
            let n = mu.len();
            let sigma = vec![0.7; n];
            let y = draw_y(&mut rng::stream(seed, 0), &mu, &sigma);
            let c = tukey_threshold(&y, &sigma, &truth);
            for q in [0.1, 0.8, 1.6, 2.9] {
                if (q - c).abs() > 1e-9 {
                    prop_assert_eq!(covers_all(&rank_bounds(&y, &sigma, q), &truth), c <= q);
                }
            }
        }
    }

    #[test]
    fn tukey_rescale_agrees_with_direct_coverage() {
        let cfg = RescaleConfig { replicates: 4000, seed: 12, tol: None };
        let res = rescale_alpha(&[1.0; 6], 0.1, &MethodSettings::tukey(), &cfg).unwrap();
        assert!(res.alpha_tilde > 0.1 && res.alpha_tilde < 1.0);
        assert!(res.achieved.p_hat >= 0.9);
        let direct = coverage_with_truth(
            &[0.0; 6],
            &[1.0; 6],
            &identity_ranks(6),
            res.alpha_tilde,
            &MethodSettings::tukey(),
            4000,
            12,
        )
        .unwrap();
        assert_eq!(direct.hits(), res.achieved.hits());
        // one bracket width further the coverage has dropped below target
        let above = coverage_with_truth(
            &[0.0; 6],
            &[1.0; 6],
            &identity_ranks(6),
            res.alpha_tilde + 2e-4,
            &MethodSettings::tukey(),
            4000,
            12,
        )
        .unwrap();
        assert!(above.p_hat < 0.9);
        assert!(quantile_exact_equal_sigma(6, res.alpha_tilde).unwrap() < quantile_exact_equal_sigma(6, 0.1).unwrap());
    }

    #[test]
    fn zhang_rescale_agrees_with_direct_coverage() {
        let mut settings = MethodSettings::zhang().with_zhang_k(2000);
        settings.zhang_precision = 1e-13;
        settings.zhang_maxiter = 200;
        let cfg = RescaleConfig { replicates: 300, seed: 5, tol: None };
        let res = rescale_alpha(&[1.0; 5], 0.2, &settings, &cfg).unwrap();
        assert!(res.alpha_tilde < 0.2);
        assert!(res.achieved.p_hat >= 0.8);
        let direct = coverage_with_truth(
            &[0.0; 5],
            &[1.0; 5],
            &identity_ranks(5),
            res.alpha_tilde,
            &settings,
            300,
            5,
        )
        .unwrap();
        assert_eq!(direct.hits(), res.achieved.hits());
    }

    #[test]
    fn zhang_rescale_reports_resolution() {
        let cfg = RescaleConfig { replicates: 200, seed: 1, tol: None };
        let err = rescale_alpha(&[1.0; 40], 0.1, &MethodSettings::zhang().with_zhang_k(1000), &cfg).unwrap_err();
        match err {
            Error::ResolutionExhausted { k, required_k, .. } => {
                assert_eq!(k, 1000);
                assert!(required_k > 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_is_symmetric_and_dips_at_zero() {
        let base: Vec<f64> = (1..=6).map(f64::from).collect();
        let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let out = epsilon_sweep(&base, &[1.0; 6], 0.1, &grid, &MethodSettings::tukey(), 4000, 2).unwrap();
        let p: Vec<f64> = out.iter().map(|(_, e)| e.p_hat).collect();
        assert!(p.iter().all(|&v| v >= p[2]));
        for (a, b) in [(0, 4), (1, 3)] {
            let se = out[a].1.std_error.max(out[b].1.std_error).max(1e-3);
            assert!((p[a] - p[b]).abs() <= 3.0 * std::f64::consts::SQRT_2 * se);
        }
        assert!(epsilon_sweep(&base, &[1.0; 6], 0.1, &[], &MethodSettings::tukey(), 4000, 2).is_err());
    }

    #[test]
    fn brute_force_covers_half_the_permutations() {
        let sigma = [0.3, 0.6, 1.0, 1.4];
        let all = brute_force_orderings(&sigma, 0.1, &MethodSettings::tukey(), 2000, 3).unwrap();
        assert_eq!(all.len(), 12);
        assert!(all.windows(2).all(|w| w[0].1.p_hat <= w[1].1.p_hat));
        assert!(brute_force_orderings(&[1.0; 8], 0.1, &MethodSettings::tukey(), 2000, 3).is_err());
    }

    #[test]
    fn three_orderings_worst_is_tree_middle_max() {
        // every arrangement of (a, b, c) up to reversal, under the same data
        let sigma = [0.2, 0.6, 1.5];
        let all = brute_force_orderings(&sigma, 0.1, &MethodSettings::tukey(), 40_000, 9).unwrap();
        let worst = &all[0];
        let tree = SigmaOrdering::tree_middle_max(&sigma);
        let tree_cov = all
            .iter()
            .find(|(o, _)| o.permutation == tree.permutation || o.permutation.iter().rev().eq(tree.permutation.iter()))
            .unwrap()
            .1;
        assert!(tree_cov.p_hat <= worst.1.p_hat + 3.0 * tree_cov.std_error);
    }
}
