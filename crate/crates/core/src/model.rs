//! Domain types: observations, true set-ranks and rank intervals.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measured item: an institution's indicator `y` with known standard
/// deviation `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub y: f64,
    pub sigma: f64,
}

impl Item {
    pub fn new(id: impl Into<String>, y: f64, sigma: f64) -> Self {
        Item {
            id: id.into(),
            y,
            sigma,
        }
    }
}

/// Validated measurements.
///
/// Items keep their input order; `sort_order()[p]` is the input index of the
/// item at sorted position `p` (ascending `y`, ties broken by input order).
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    items: Vec<Item>,
    order: Vec<usize>,
    position: Vec<usize>,
}

/// Validates raw `(id, y, sigma)` rows.
pub fn validate_observations(raw: Vec<Item>) -> Result<Observations> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut seen = HashSet::with_capacity(raw.len());
    for item in &raw {
        if !item.y.is_finite() {
            return Err(Error::non_finite(format!("y of item `{}`", item.id)));
        }
        if !(item.sigma.is_finite() && item.sigma > 0.0) {
            return Err(Error::NonPositiveSigma {
                id: item.id.clone(),
                sigma: item.sigma,
            });
        }
        if !seen.insert(item.id.as_str()) {
            return Err(Error::DuplicateId(item.id.clone()));
        }
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    // stable sort keeps input order among equal y
    order.sort_by(|&a, &b| raw[a].y.total_cmp(&raw[b].y));
    let mut position = vec![0; raw.len()];
    for (p, &i) in order.iter().enumerate() {
        position[i] = p;
    }
    Ok(Observations {
        items: raw,
        order,
        position,
    })
}

impl Observations {
    pub fn new(raw: Vec<Item>) -> Result<Self> {
        validate_observations(raw)
    }

    /// Builds observations with ids `"1"`, `"2"`, ... in input order.
    pub fn from_values(y: &[f64], sigma: &[f64]) -> Result<Self> {
        if y.len() != sigma.len() {
            return Err(Error::invalid(format!(
                "{} measurements but {} standard deviations",
                y.len(),
                sigma.len()
            )));
        }
        let raw = y
            .iter()
            .zip(sigma)
            .enumerate()
            .map(|(i, (&y, &s))| Item::new((i + 1).to_string(), y, s))
            .collect();
        validate_observations(raw)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items in input order.
    pub fn items(&self) -> &[Item] {
        &self.items
    }

    /// Sorted position → input index.
    pub fn sort_order(&self) -> &[usize] {
        &self.order
    }

    /// Sorted position (0-based) of the item with input index `i`.
    pub fn sorted_position(&self, i: usize) -> usize {
        self.position[i]
    }

    pub fn y(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.y).collect()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.sigma).collect()
    }

    pub fn sorted_y(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.items[i].y).collect()
    }

    pub fn sorted_sigma(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.items[i].sigma).collect()
    }

    pub fn has_equal_sigma(&self) -> bool {
        all_equal(&self.sigma())
    }
}

pub(crate) fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// The true rank set `[lower, upper]` of one mean, allowing for ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetRank {
    pub lower: usize,
    pub upper: usize,
}

impl SetRank {
    /// A tie-free rank.
    pub fn single(rank: usize) -> Self {
        SetRank {
            lower: rank,
            upper: rank,
        }
    }
}

/// Tie-aware ranks of `mu`.
///
/// `lower = 1 + #{j : mu_j < mu_i}` and `upper = n - #{j : mu_j > mu_i}`, so
/// tied means share one rank set covering all the positions they could take.
pub fn set_ranks(mu: &[f64]) -> Result<Vec<SetRank>> {
    if mu.is_empty() {
        return Err(Error::EmptyInput);
    }
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::non_finite("mean vector"));
    }
    let n = mu.len();
    let mut sorted = mu.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(mu
        .iter()
        .map(|&m| {
            let below = sorted.partition_point(|&v| v < m);
            let not_above = sorted.partition_point(|&v| v <= m);
            debug_assert!(not_above <= n);
            SetRank {
                lower: 1 + below,
                upper: not_above,
            }
        })
        .collect())
}

/// Ranks `1..=n` in input order: the no-ties convention used when all means
/// are (arbitrarily close to) zero.
pub fn identity_ranks(n: usize) -> Vec<SetRank> {
    (1..=n).map(SetRank::single).collect()
}

/// A confidence interval `[lower, upper]` for one rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankInterval {
    pub lower: usize,
    pub upper: usize,
}

impl RankInterval {
    pub fn new(lower: usize, upper: usize) -> Self {
        debug_assert!(1 <= lower && lower <= upper, "bad interval [{lower}, {upper}]");
        RankInterval { lower, upper }
    }

    pub fn width(&self) -> usize {
        self.upper - self.lower
    }

    pub fn contains_rank(&self, rank: usize) -> bool {
        self.lower <= rank && rank <= self.upper
    }

    /// Whether the whole true rank set lies inside the interval.
    pub fn covers(&self, truth: &SetRank) -> bool {
        self.lower <= truth.lower && truth.upper <= self.upper
    }
}

impl fmt::Display for RankInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

/// The simultaneous event: every interval covers its true rank set.
pub fn covers_all(intervals: &[RankInterval], truth: &[SetRank]) -> bool {
    debug_assert_eq!(intervals.len(), truth.len());
    intervals.iter().zip(truth).all(|(ci, t)| ci.covers(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tukey,
    Zhang,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tukey => "tukey",
            Method::Zhang => "zhang",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tukey" => Ok(Method::Tukey),
            "zhang" => Ok(Method::Zhang),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Simultaneous rank intervals, reported in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCiResult {
    pub method: Method,
    pub alpha_nominal: f64,
    /// Level actually used to build the intervals (differs after rescaling).
    pub alpha_effective: f64,
    pub intervals: Vec<RankInterval>,
    /// Tukey critical value.
    pub quantile_used: Option<f64>,
    /// Pointwise level picked by the Monte-Carlo bisection.
    pub beta_used: Option<f64>,
    /// Monte-Carlo estimate of joint coverage at `beta_used`.
    pub estimated_coverage: Option<f64>,
    pub seed: u64,
}

impl RankCiResult {
    /// Marks the result as computed at a rescaled level for nominal `alpha`.
    pub fn with_nominal(mut self, alpha: f64) -> Self {
        self.alpha_nominal = alpha;
        self
    }

    pub fn covers(&self, truth: &[SetRank]) -> bool {
        covers_all(&self.intervals, truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_set_ranks(mu: &[f64]) -> Vec<SetRank> {
        let n = mu.len();
        (0..n)
            .map(|i| {
                let below = (0..n).filter(|&j| j != i && mu[j] < mu[i]).count();
                let above = (0..n).filter(|&j| j != i && mu[j] > mu[i]).count();
                SetRank {
                    lower: 1 + below,
                    upper: n - above,
                }
            })
            .collect()
    }

    #[test]
    fn sorts_and_records_order() {
        let obs = validate_observations(vec![Item::new("a", 2.0, 1.0), Item::new("b", 1.0, 1.0)])
            .unwrap();
        assert_eq!(obs.sort_order(), &[1, 0]);
        assert_eq!(obs.sorted_y(), vec![1.0, 2.0]);
        assert_eq!(obs.sorted_position(0), 1);
        assert_eq!(obs.items()[0].id, "a");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            validate_observations(vec![Item::new("a", 1.0, 0.0)]),
            Err(Error::NonPositiveSigma {
                id: "a".into(),
                sigma: 0.0
            })
        );
        assert_eq!(validate_observations(vec![]), Err(Error::EmptyInput));
        assert!(matches!(
            validate_observations(vec![Item::new("a", f64::NAN, 1.0)]),
            Err(Error::NonFiniteValue { .. })
        ));
        assert!(matches!(
            validate_observations(vec![Item::new("a", 1.0, f64::INFINITY)]),
            Err(Error::NonPositiveSigma { .. })
        ));
        assert_eq!(
            validate_observations(vec![Item::new("a", 1.0, 1.0), Item::new("a", 2.0, 1.0)]),
            Err(Error::DuplicateId("a".into()))
        );
    }

    #[test]
    fn singleton() {
        let obs = validate_observations(vec![Item::new("a", 1.0, 1.0)]).unwrap();
        assert_eq!(obs.len(), 1);
    }

    #[test]
    fn tied_y_broken_by_input_order() {
        let obs = Observations::from_values(&[3.0, 1.0, 3.0, 1.0], &[1.0; 4]).unwrap();
        assert_eq!(obs.sort_order(), &[1, 3, 0, 2]);
    }

    #[test]
    fn three_center_example() {
        let r = set_ranks(&[0.5, 0.5, 2.0]).unwrap();
        assert_eq!(r, vec![SetRank { lower: 1, upper: 2 }, SetRank { lower: 1, upper: 2 }, SetRank::single(3)]);
    }

    #[test]
    fn distinct_and_full_tie() {
        assert_eq!(set_ranks(&[1.0, 2.0, 3.0]).unwrap(), identity_ranks(3));
        assert!(set_ranks(&[5.0; 3]).unwrap().iter().all(|r| *r == SetRank { lower: 1, upper: 3 }));
        assert!(set_ranks(&[1.0, f64::INFINITY]).is_err());
        assert!(set_ranks(&[]).is_err());
    }

    fn tie_prone_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((-4i32..4).prop_map(|v| v as f64 * 0.5), 1..12)
    }

    proptest! {
        #[test]
        fn matches_brute_force(mu in tie_prone_vec()) {
            prop_assert_eq!(set_ranks(&mu).unwrap(), brute_set_ranks(&mu));
        }

        #[test]
        fn ties_share_ranks_and_cover_all(mu in tie_prone_vec()) {
            let n = mu.len();
            let r = set_ranks(&mu).unwrap();
            let mut covered = vec![false; n + 1];
            for i in 0..n {
                prop_assert!(1 <= r[i].lower && r[i].lower <= r[i].upper && r[i].upper <= n);
                for j in 0..n {
                    if mu[i] == mu[j] {
                        prop_assert_eq!(r[i], r[j]);
                    }
                }
                for k in r[i].lower..=r[i].upper {
                    covered[k] = true;
                }
            }
            prop_assert!(covered[1..].iter().all(|&c| c));
        }

        #[test]
        fn distinct_means_give_a_permutation(mut mu in prop::collection::vec(-100.0f64..100.0, 1..15)) {
            mu.sort_by(f64::total_cmp);
            mu.dedup();
            let r = set_ranks(&mu).unwrap();
            let mut lows: Vec<usize> = r.iter().map(|s| { assert_eq!(s.lower, s.upper); s.lower }).collect();
            lows.sort();
            prop_assert_eq!(lows, (1..=mu.len()).collect::<Vec<_>>());
        }

        #[test]
        fn invariant_under_increasing_maps(mu in tie_prone_vec()) {
            let mapped: Vec<f64> = mu.iter().map(|m| (m * 0.7).exp() + 3.0).collect();
            prop_assert_eq!(set_ranks(&mu).unwrap(), set_ranks(&mapped).unwrap());
        }
    }
}
