//! Simultaneous confidence intervals for the ranks of Gaussian means.
//!
//! Each item `i` has an estimate `y_i ~ N(μ_i, σ_i²)` with known `σ_i`. The
//! crate builds intervals `[L_i, U_i]` that contain the true ranks of all
//! `μ_i` at once with probability at least `1 − α`, using either Tukey's
//! honest significant differences ([`tukey`]) or a Monte-Carlo method
//! ([`zhang`]), and can rescale either one to its worst case ([`rescale`]).
//!
//! ```
//! use rankgauge::{tukey_rank_cis, Observations, TukeyConfig};
//!
//! let obs = Observations::from_values(&[0.1, 2.0, 2.3, 5.0], &[0.3, 0.3, 0.3, 0.3])?;
//! let res = tukey_rank_cis(&obs, 0.1, &TukeyConfig::default())?;
//! assert_eq!(res.intervals[0].to_string(), "[1, 1]");
//! assert_eq!(res.intervals[3].to_string(), "[4, 4]");
//! # Ok::<(), rankgauge::Error>(())
//! ```

pub mod config;
pub mod error;
mod integrate;
pub mod model;
pub mod rankability;
pub mod rescale;
pub mod rng;
pub mod settings;
pub mod simulation;
pub mod studentized;
pub mod tukey;
pub mod zhang;

pub use error::{Error, Result};
pub use model::{
    covers_all, identity_ranks, set_ranks, Item, Method, Observations, RankCiResult, RankInterval,
    SetRank,
};
pub use rankability::{estimated_rankability, true_rankability, Rankability};
pub use rescale::{
    coverage_at, coverage_with_truth, epsilon_sweep, rescale_alpha, worst_case_sigma_ordering,
    CoverageEstimate, RescaleConfig, Rescaled, SigmaOrdering,
};
pub use settings::{rank_cis, MethodSettings};
pub use studentized::studentized_range_quantile;
pub use tukey::{tukey_rank_cis, TukeyConfig};
pub use zhang::{zhang_simultaneous_cis, ZhangConfig};
