//! Critical values of the studentized range with known standard deviations.
//!
//! For centred Gaussians `Ỹ_i ~ N(0, σ_i²)` the statistic is
//!
//! ```text
//! W = max_{i<j} |Ỹ_i − Ỹ_j| / sqrt(σ_i² + σ_j²)
//! ```
//!
//! and the Tukey critical value is its `1 − α` quantile. With unequal `σ` the
//! quantile is estimated by Monte Carlo. When every `σ` is equal, `W` is the
//! range of `n` standard normals divided by `√2` and the quantile follows from
//! the range distribution by quadrature.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::integrate::integrate;
use crate::model::all_equal;
use crate::rng;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MIN_SAMPLES: usize = 1000;

const QUAD_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileMethod {
    MonteCarlo,
    ExactEqualSigma,
    /// Exact when all `σ` are equal, Monte Carlo otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRequest {
    pub sigma: Vec<f64>,
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    pub method: QuantileMethod,
}

impl QuantileRequest {
    pub fn new(sigma: Vec<f64>, alpha: f64) -> Self {
        QuantileRequest {
            sigma,
            alpha,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            method: QuantileMethod::Auto,
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("significance level must lie in (0, 1), got {alpha}")))
    }
}

fn check_sigma(sigma: &[f64]) -> Result<()> {
    if sigma.iter().all(|s| s.is_finite() && *s > 0.0) {
        Ok(())
    } else {
        Err(Error::invalid("standard deviations must be positive and finite"))
    }
}

/// Index (1-based) of the order statistic used as the empirical `1 − α`
/// quantile of `samples` draws: `⌈(1 − α)·B⌉`, the conservative side.
pub fn upper_order_index(alpha: f64, samples: usize) -> usize {
    let raw = ((1.0 - alpha) * samples as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(samples)
}

/// Draws `samples` values of the studentized range for the given `σ`.
/// Replicate `b` is the same for any worker count.
pub fn sample_statistic(sigma: &[f64], samples: usize, seed: u64) -> Vec<f64> {
    let n = sigma.len();
    if n < 2 {
        return vec![0.0; samples];
    }
    if all_equal(sigma) {
        let inv = 1.0 / (2.0 * sigma[0] * sigma[0]).sqrt();
        return rng::map_replicates(seed, samples, |rng, _| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &s in sigma {
                let v = s * rng.sample::<f64, _>(StandardNormal);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (hi - lo) * inv
        });
    }
    let inv: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            1.0 / (sigma[i] * sigma[i] + sigma[j] * sigma[j]).sqrt()
        })
        .collect();
    rng::map_replicates(seed, samples, |rng, _| {
        let draw: Vec<f64> = sigma
            .iter()
            .map(|&s| s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut w = 0.0f64;
        for i in 0..n {
            let row = &inv[i * n..(i + 1) * n];
            for j in (i + 1)..n {
                w = w.max((draw[i] - draw[j]).abs() * row[j]);
            }
        }
        w
    })
}

/// Monte-Carlo `1 − α` quantile of the studentized range.
pub fn quantile_mc(req: &QuantileRequest) -> Result<f64> {
    check_alpha(req.alpha)?;
    check_sigma(&req.sigma)?;
    if req.samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            got: req.samples,
        });
    }
    if req.sigma.len() < 2 {
        return Ok(0.0);
    }
    let mut draws = sample_statistic(&req.sigma, req.samples, req.seed);
    let k = upper_order_index(req.alpha, req.samples) - 1;
    let (_, kth, _) = draws.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*kth)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(range of n iid N(0,1) < w)`.
pub fn range_cdf(n: usize, w: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewItems { required: 2, got: n });
    }
    if w <= 0.0 {
        return Ok(0.0);
    }
    let m = (n - 1) as i32;
    let integrand = |z: f64| {
        // Φ(z) − Φ(z − w), computed on the tail that avoids cancellation
        let mass = if z - 0.5 * w > 0.0 {
            std_normal_sf(z - w) - std_normal_sf(z)
        } else {
            std_normal_cdf(z) - std_normal_cdf(z - w)
        };
        std_normal_pdf(z) * mass.powi(m)
    };
    let value = n as f64 * integrate(integrand, -12.0, 12.0 + w, QUAD_TOL)?;
    Ok(value.clamp(0.0, 1.0))
}

/// Exact `1 − α` quantile of the studentized range when all `σ` are equal.
pub fn quantile_exact_equal_sigma(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 2 {
        return Ok(0.0);
    }
    let target = 1.0 - alpha;
    let mut lo = 0.0;
    let mut hi = 4.0;
    while range_cdf(n, hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::ConvergenceFailure(format!(
                "no range quantile found for n = {n}, alpha = {alpha}"
            )));
        }
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if range_cdf(n, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / std::f64::consts::SQRT_2)
}

/// Dispatches on `req.method`.
pub fn studentized_range_quantile(req: &QuantileRequest) -> Result<f64> {
    check_sigma(&req.sigma)?;
    let equal = all_equal(&req.sigma);
    match req.method {
        QuantileMethod::ExactEqualSigma if !equal => Err(Error::invalid(
            "exact quantile requires equal standard deviations",
        )),
        QuantileMethod::ExactEqualSigma => quantile_exact_equal_sigma(req.sigma.len(), req.alpha),
        QuantileMethod::Auto if equal => quantile_exact_equal_sigma(req.sigma.len(), req.alpha),
        QuantileMethod::Auto | QuantileMethod::MonteCarlo => quantile_mc(req),
    }
}

/// Critical values at many levels for one `σ` vector, sharing a single
/// Monte-Carlo sample across levels (common random numbers).
#[derive(Debug, Clone)]
pub enum CriticalValues {
    /// One item: nothing to compare.
    Trivial,
    Exact { n: usize },
    Sampled { sorted: Vec<f64> },
}

impl CriticalValues {
    pub fn new(sigma: &[f64], method: QuantileMethod, samples: usize, seed: u64) -> Result<Self> {
        check_sigma(sigma)?;
        let n = sigma.len();
        if n < 2 {
            return Ok(CriticalValues::Trivial);
        }
        let equal = all_equal(sigma);
        let exact = match method {
            QuantileMethod::ExactEqualSigma if !equal => {
                return Err(Error::invalid(
                    "exact quantile requires equal standard deviations",
                ))
            }
            QuantileMethod::ExactEqualSigma => true,
            QuantileMethod::Auto => equal,
            QuantileMethod::MonteCarlo => false,
        };
        if exact {
            return Ok(CriticalValues::Exact { n });
        }
        if samples < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                required: MIN_SAMPLES,
                got: samples,
            });
        }
        let mut sorted = sample_statistic(sigma, samples, seed);
        sorted.par_sort_unstable_by(f64::total_cmp);
        Ok(CriticalValues::Sampled { sorted })
    }

    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        match self {
            CriticalValues::Trivial => Ok(0.0),
            CriticalValues::Exact { n } => quantile_exact_equal_sigma(*n, alpha),
            CriticalValues::Sampled { sorted } => {
                Ok(sorted[upper_order_index(alpha, sorted.len()) - 1])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn probit(p: f64) -> f64 {
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
    }

    #[test]
    fn exact_two_items_is_half_normal() {
        assert_abs_diff_eq!(quantile_exact_equal_sigma(2, 0.05).unwrap(), probit(0.975), epsilon = 1e-7);
        assert_abs_diff_eq!(quantile_exact_equal_sigma(2, 0.5).unwrap(), probit(0.75), epsilon = 1e-7);
        assert_abs_diff_eq!(quantile_exact_equal_sigma(2, 0.99).unwrap(), probit(0.505), epsilon = 1e-7);
    }

    #[test]
    fn exact_matches_tabulated_tukey_value() {
        // qtukey(0.95, 10, Inf) = 4.474124
        let q = quantile_exact_equal_sigma(10, 0.05).unwrap();
        assert_abs_diff_eq!(q * std::f64::consts::SQRT_2, 4.474124, epsilon = 2e-5);
    }

    #[test]
    fn range_cdf_two_items_closed_form() {
        for w in [0.1, 0.7, 1.5, 3.0] {
            let expected = 2.0 * std_normal_cdf(w / std::f64::consts::SQRT_2) - 1.0;
            assert_abs_diff_eq!(range_cdf(2, w).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn exact_monotone() {
        let a = quantile_exact_equal_sigma(10, 0.05).unwrap();
        let b = quantile_exact_equal_sigma(10, 0.10).unwrap();
        let c = quantile_exact_equal_sigma(11, 0.10).unwrap();
        assert!(a > b && c > b);
    }

    #[test]
    fn mc_two_items_within_three_se() {
        let req = QuantileRequest {
            sigma: vec![1.0, 1.0],
            alpha: 0.05,
            samples: 1_000_000,
            seed: 11,
            method: QuantileMethod::MonteCarlo,
        };
        let q = quantile_mc(&req).unwrap();
        // se of an empirical quantile: sqrt(p(1−p)/B) / density, density of |Z| at q
        let truth = probit(0.975);
        let dens = 2.0 * std_normal_pdf(truth);
        let se = (0.95f64 * 0.05 / 1e6).sqrt() / dens;
        assert!((q - truth).abs() < 3.0 * se, "q = {q}, truth = {truth}, se = {se}");
    }

    #[test]
    fn mc_near_one_alpha() {
        let req = QuantileRequest {
            sigma: vec![1.0, 1.0],
            alpha: 0.99,
            samples: 1_000_000,
            seed: 5,
            method: QuantileMethod::MonteCarlo,
        };
        let q = quantile_mc(&req).unwrap();
        let truth = probit(0.505);
        let se = (0.01f64 * 0.99 / 1e6).sqrt() / (2.0 * std_normal_pdf(truth));
        assert!((q - truth).abs() < 3.0 * se, "q = {q}, truth = {truth}");
    }

    #[test]
    fn mc_equals_exact_for_ten_items() {
        let req = QuantileRequest {
            sigma: vec![1.0; 10],
            alpha: 0.05,
            samples: 10_000_000,
            seed: 99,
            method: QuantileMethod::MonteCarlo,
        };
        let mc = quantile_mc(&req).unwrap();
        let exact = quantile_exact_equal_sigma(10, 0.05).unwrap();
        // density of W at the exact quantile by central difference of the range cdf
        let h = 1e-4;
        let s2 = std::f64::consts::SQRT_2;
        let dens = (range_cdf(10, (exact + h) * s2).unwrap() - range_cdf(10, (exact - h) * s2).unwrap())
            / (2.0 * h);
        let se = (0.05f64 * 0.95 / 1e7).sqrt() / dens;
        assert!((mc - exact).abs() < 3.0 * se, "mc = {mc}, exact = {exact}, se = {se}");
    }

    #[test]
    fn scale_free_with_same_seed() {
        let sigma = vec![0.3, 1.1, 0.7, 2.0];
        let base = sample_statistic(&sigma, 5000, 3);
        let doubled: Vec<f64> = sigma.iter().map(|s| s * 4.0).collect();
        assert_eq!(base, sample_statistic(&doubled, 5000, 3));
        let odd: Vec<f64> = sigma.iter().map(|s| s * 3.7).collect();
        for (a, b) in base.iter().zip(sample_statistic(&odd, 5000, 3)) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn equal_sigma_fast_path_matches_pairs() {
        let sigma = vec![1.3; 6];
        let fast = sample_statistic(&sigma, 600, 8);
        let draws = rng::map_replicates(8, 600, |rng, _| {
            let d: Vec<f64> = sigma.iter().map(|&s| s * rng.sample::<f64, _>(StandardNormal)).collect();
            let mut w = 0.0f64;
            for i in 0..6 {
                for j in i + 1..6 {
                    w = w.max((d[i] - d[j]).abs() / (2.0 * 1.3f64 * 1.3).sqrt());
                }
            }
            w
        });
        for (a, b) in fast.iter().zip(&draws) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_and_conventions() {
        let mut req = QuantileRequest::new(vec![1.0, 2.0], 0.1);
        req.samples = 10;
        assert!(matches!(quantile_mc(&req), Err(Error::TooFewSamples { .. })));
        req.samples = 2000;
        req.method = QuantileMethod::ExactEqualSigma;
        assert!(studentized_range_quantile(&req).is_err());
        assert_eq!(quantile_exact_equal_sigma(1, 0.1).unwrap(), 0.0);
        assert_eq!(quantile_mc(&QuantileRequest::new(vec![1.0], 0.1)).unwrap(), 0.0);
        assert!(quantile_exact_equal_sigma(5, 1.0).is_err());
    }

    #[test]
    fn order_index_is_conservative() {
        assert_eq!(upper_order_index(0.05, 100_000), 95_000);
        assert_eq!(upper_order_index(0.1, 1000), 900);
        assert_eq!(upper_order_index(0.0999, 1000), 901);
        assert_eq!(upper_order_index(0.999_999, 10), 1);
    }

    #[test]
    fn critical_values_share_one_sample() {
        let sigma = vec![0.5, 1.0, 1.5];
        let cv = CriticalValues::new(&sigma, QuantileMethod::Auto, 20_000, 4).unwrap();
        let mut req = QuantileRequest::new(sigma.clone(), 0.1);
        req.samples = 20_000;
        req.seed = 4;
        assert_eq!(cv.quantile(0.1).unwrap(), quantile_mc(&req).unwrap());
        assert!(cv.quantile(0.05).unwrap() > cv.quantile(0.2).unwrap());
    }
}
