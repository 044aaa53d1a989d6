//! Rankability: how well a set of means can be told apart.
//!
//! `R_n = 1 − Σ (u_i − l_i) / (n(n − 1))` over the true set-ranks is the
//! probability that two means drawn at random get different ranks. Replacing
//! the set-ranks by simultaneous `1 − α` rank intervals gives an estimate
//! `R̂_n(α)` that falls at or below `R_n` whenever the intervals cover, so
//! `[R̂_n(α), 1]` is a `1 − α` confidence interval for `R_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{set_ranks, RankInterval};

fn normalised_width(n: usize, total: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewItems { required: 2, got: n });
    }
    Ok(1.0 - total as f64 / (n * (n - 1)) as f64)
}

pub fn true_rankability(mu: &[f64]) -> Result<f64> {
    let ranks = set_ranks(mu)?;
    normalised_width(mu.len(), ranks.iter().map(|r| r.upper - r.lower).sum())
}

/// `R̂_n(α)` together with its one-sided interval `[R̂_n(α), 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rankability {
    pub estimate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

impl Rankability {
    /// Average normalised interval width, `1 − R̂_n(α)`; smaller is better.
    pub fn efficiency(&self) -> f64 {
        1.0 - self.estimate
    }
}

pub fn estimated_rankability(intervals: &[RankInterval]) -> Result<Rankability> {
    let r = normalised_width(intervals.len(), intervals.iter().map(RankInterval::width).sum())?;
    Ok(Rankability {
        estimate: r,
        ci_lower: r,
        ci_upper: 1.0,
    })
}
