//! Rank intervals from Tukey's honest significant difference.
//!
//! With critical value `q` the pairwise difference `μ_i − μ_j` lies in
//! `y_i − y_j ± sqrt(σ_i² + σ_j²)·q` for all pairs at once with probability at
//! least `1 − α`. Counting the pairs whose interval lies strictly above or
//! below zero gives
//!
//! ```text
//! L_i = 1 + #{j : y_i − y_j − s_ij·q > 0}
//! U_i = n − #{j : y_i − y_j + s_ij·q < 0}
//! ```
//!
//! and the intervals `[L_i, U_i]` hold for all ranks simultaneously.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Method, Observations, RankCiResult, RankInterval};
use crate::studentized::{self, QuantileMethod, QuantileRequest};

/// Row count above which the pairwise loop is split across workers.
const PARALLEL_ROWS: usize = 256;

/// Confidence interval for a difference of two means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceCi {
    pub lower: f64,
    pub upper: f64,
}

fn check_q(q: f64) -> Result<()> {
    if q >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("critical value must be non-negative, got {q}")))
    }
}

/// The `n × n` matrix of simultaneous difference intervals in input order.
/// Entry `[i][j]` bounds `μ_i − μ_j`; the diagonal is `[0, 0]`.
pub fn difference_cis(obs: &Observations, q: f64) -> Result<Vec<Vec<DifferenceCi>>> {
    check_q(q)?;
    let items = obs.items();
    Ok(items
        .iter()
        .enumerate()
        .map(|(i, a)| {
            items
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    if i == j {
                        return DifferenceCi {
                            lower: 0.0,
                            upper: 0.0,
                        };
                    }
                    let d = a.y - b.y;
                    let h = (a.sigma * a.sigma + b.sigma * b.sigma).sqrt() * q;
                    DifferenceCi {
                        lower: d - h,
                        upper: d + h,
                    }
                })
                .collect()
        })
        .collect())
}

fn row_bounds(i: usize, y: &[f64], sigma: &[f64], q: f64) -> RankInterval {
    let n = y.len();
    let (yi, vi) = (y[i], sigma[i] * sigma[i]);
    let mut above = 0;
    let mut below = 0;
    for (&yj, &sj) in y.iter().zip(sigma) {
        let d = yi - yj;
        let h = (vi + sj * sj).sqrt() * q;
        if d - h > 0.0 {
            above += 1;
        }
        if d + h < 0.0 {
            below += 1;
        }
    }
    RankInterval::new(1 + above, n - below)
}

/// Tukey rank intervals for raw measurement slices, in the order given.
/// `y` need not be sorted.
pub fn rank_bounds(y: &[f64], sigma: &[f64], q: f64) -> Vec<RankInterval> {
    debug_assert_eq!(y.len(), sigma.len());
    if y.len() >= PARALLEL_ROWS {
        (0..y.len())
            .into_par_iter()
            .map(|i| row_bounds(i, y, sigma, q))
            .collect()
    } else {
        (0..y.len()).map(|i| row_bounds(i, y, sigma, q)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyConfig {
    /// Use this critical value instead of computing one.
    pub quantile_override: Option<f64>,
    pub method: QuantileMethod,
    pub samples: usize,
    pub seed: u64,
}

impl Default for TukeyConfig {
    fn default() -> Self {
        TukeyConfig {
            quantile_override: None,
            method: QuantileMethod::Auto,
            samples: studentized::DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

/// Simultaneous `1 − α` rank intervals, reported in input order.
pub fn tukey_rank_cis(obs: &Observations, alpha: f64, cfg: &TukeyConfig) -> Result<RankCiResult> {
    studentized::check_alpha(alpha)?;
    let q = match cfg.quantile_override {
        Some(q) => {
            check_q(q)?;
            q
        }
        None => studentized::studentized_range_quantile(&QuantileRequest {
            sigma: obs.sigma(),
            alpha,
            samples: cfg.samples,
            seed: cfg.seed,
            method: cfg.method,
        })?,
    };
    Ok(RankCiResult {
        method: Method::Tukey,
        alpha_nominal: alpha,
        alpha_effective: alpha,
        intervals: rank_bounds(&obs.y(), &obs.sigma(), q),
        quantile_used: Some(q),
        beta_used: None,
        estimated_coverage: None,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Item;
    use proptest::prelude::*;

    fn with_q(q: f64) -> TukeyConfig {
        TukeyConfig {
            quantile_override: Some(q),
            ..TukeyConfig::default()
        }
    }

    /// Counts sign-definite difference intervals, as in the proof of joint coverage.
    fn oracle(obs: &Observations, q: f64) -> Vec<RankInterval> {
        let m = difference_cis(obs, q).unwrap();
        let n = obs.len();
        (0..n)
            .map(|i| {
                let pos = (0..n).filter(|&j| j != i && m[i][j].lower > 0.0).count();
                let neg = (0..n).filter(|&j| j != i && m[i][j].upper < 0.0).count();
                RankInterval::new(1 + pos, n - neg)
            })
            .collect()
    }

    #[test]
    fn zero_width_at_zero_q() {
        let obs = Observations::from_values(&[1.0, 4.0, 2.5], &[1.0, 2.0, 0.5]).unwrap();
        let m = difference_cis(&obs, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j].lower, m[i][j].upper);
                if i != j {
                    assert_eq!(m[i][j].lower, obs.items()[i].y - obs.items()[j].y);
                }
            }
            assert_eq!(m[i][i], DifferenceCi { lower: 0.0, upper: 0.0 });
        }
    }

    #[test]
    fn antisymmetric() {
        let obs = Observations::from_values(&[1.0, 4.0, 2.5], &[1.0, 2.0, 0.5]).unwrap();
        let m = difference_cis(&obs, 1.7).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j].lower + m[j][i].upper).abs() < 1e-12);
            }
        }
    }

    /// Geometry whose q = 2 difference intervals round to
    /// A−B ∈ [−2,−1], A−C ∈ [−3,−2], B−C ∈ [−1,1] and their mirror images.
    fn abc() -> Observations {
        Observations::new(vec![
            Item::new("A", 0.0, 0.05),
            Item::new("B", 1.8, 0.33),
            Item::new("C", 2.1, 0.24),
        ])
        .unwrap()
    }

    #[test]
    fn worked_three_institution_example() {
        let obs = abc();
        let m = difference_cis(&obs, 2.0).unwrap();
        let rounded = |i: usize, j: usize| (m[i][j].lower.round(), m[i][j].upper.round());
        assert_eq!(rounded(0, 1), (-2.0, -1.0));
        assert_eq!(rounded(0, 2), (-3.0, -2.0));
        assert_eq!(rounded(1, 0), (1.0, 2.0));
        assert_eq!(rounded(1, 2), (-1.0, 1.0));
        assert_eq!(rounded(2, 0), (2.0, 3.0));
        assert_eq!(rounded(2, 1), (-1.0, 1.0));
        let res = tukey_rank_cis(&obs, 0.1, &with_q(2.0)).unwrap();
        assert_eq!(
            res.intervals,
            vec![RankInterval::new(1, 1), RankInterval::new(2, 3), RankInterval::new(2, 3)]
        );
    }

    #[test]
    fn infinite_q_rejects_nothing() {
        let obs = Observations::from_values(&[1.0, 40.0, 2.5, -8.0], &[1.0; 4]).unwrap();
        let res = tukey_rank_cis(&obs, 0.1, &with_q(f64::INFINITY)).unwrap();
        assert!(res.intervals.iter().all(|ci| *ci == RankInterval::new(1, 4)));
    }

    #[test]
    fn single_item() {
        let obs = Observations::from_values(&[3.0], &[1.0]).unwrap();
        let res = tukey_rank_cis(&obs, 0.1, &TukeyConfig::default()).unwrap();
        assert_eq!(res.intervals, vec![RankInterval::new(1, 1)]);
    }

    #[test]
    fn five_items_match_oracle() {
        let obs = Observations::from_values(&[0.3, -1.2, 2.2, 0.9, 5.0], &[0.4, 1.0, 0.7, 0.2, 1.5])
            .unwrap();
        let res = tukey_rank_cis(&obs, 0.1, &TukeyConfig { seed: 3, ..TukeyConfig::default() }).unwrap();
        assert_eq!(res.intervals, oracle(&obs, res.quantile_used.unwrap()));
    }

    #[test]
    fn rejects_negative_override() {
        let obs = abc();
        assert!(tukey_rank_cis(&obs, 0.1, &with_q(-1.0)).is_err());
        assert!(tukey_rank_cis(&obs, 1.5, &with_q(1.0)).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (1usize..9).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(0.1f64..2.0, n),
                0.0f64..4.0,
            )
        })
    }

    proptest! {
        #[test]
        fn equals_difference_oracle((y, s, q) in instance()) {
            let obs = Observations::from_values(&y, &s).unwrap();
            prop_assert_eq!(rank_bounds(&y, &s, q), oracle(&obs, q));
        }

        #[test]
        fn sorted_position_is_contained((y, s, q) in instance()) {
            let obs = Observations::from_values(&y, &s).unwrap();
            let cis = rank_bounds(&y, &s, q);
            for i in 0..y.len() {
                let p = obs.sorted_position(i) + 1;
                prop_assert!(cis[i].contains_rank(p));
            }
        }

        #[test]
        fn nested_in_q((y, s, q) in instance(), extra in 0.0f64..2.0) {
            let narrow = rank_bounds(&y, &s, q);
            let wide = rank_bounds(&y, &s, q + extra);
            for (a, b) in narrow.iter().zip(&wide) {
                prop_assert!(b.lower <= a.lower && a.upper <= b.upper);
            }
        }

        #[test]
        fn equal_sigma_bounds_monotone((mut y, _s, q) in instance()) {
            y.sort_by(f64::total_cmp);
            let s = vec![0.8; y.len()];
            let cis = rank_bounds(&y, &s, q);
            for w in cis.windows(2) {
                prop_assert!(w[0].lower <= w[1].lower && w[0].upper <= w[1].upper);
            }
        }

        #[test]
        fn shift_and_power_of_two_scale_invariant((y, s, q) in instance(), shift in -3i32..3) {
            let base = rank_bounds(&y, &s, q);
            let shifted: Vec<f64> = y.iter().map(|v| v + shift as f64 * 0.25).collect();
            // shifting by a dyadic constant can still round; compare away from ties
            let scaled_y: Vec<f64> = y.iter().map(|v| v * 4.0).collect();
            let scaled_s: Vec<f64> = s.iter().map(|v| v * 4.0).collect();
            prop_assert_eq!(&base, &rank_bounds(&scaled_y, &scaled_s, q));
            let moved = rank_bounds(&shifted, &s, q);
            let near_tie = (0..y.len()).any(|i| (0..y.len()).any(|j| {
                let d = y[i] - y[j];
                let h = (s[i] * s[i] + s[j] * s[j]).sqrt() * q;
                i != j && ((d - h).abs() < 1e-9 || (d + h).abs() < 1e-9)
            }));
            if !near_tie {
                prop_assert_eq!(&base, &moved);
            }
        }
    }
}
