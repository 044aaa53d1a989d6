//! Coverage and efficiency of both methods over random mean vectors.
//!
//! A cell draws `center_draws` mean vectors `μ ~ N(0, τ²I)`, one observation
//! `y ~ N(μ, I)` per vector, and records whether the rank intervals cover
//! the tie-aware ranks of `μ` along with `1 − R̂_n`. Coverage is therefore
//! averaged over the distribution of `μ` rather than conditional on one.
//!
//! Rescaled cells use `α̃` from [`crate::rescale::rescale_alpha`], computed
//! once per `(n, method)` and reported alongside the cells.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{covers_all, set_ranks, Method, RankInterval};
use crate::rankability::estimated_rankability;
use crate::rescale::{self, epsilon_sweep, CoverageEstimate, OrderingKind, RescaleConfig, SigmaOrdering};
use crate::rng;
use crate::settings::MethodSettings;
use crate::studentized::{self, check_alpha, CriticalValues, QuantileMethod};
use crate::tukey::rank_bounds;
use crate::zhang::{self, fit_values};

const TAG_QUANTILE: u64 = 11;
const TAG_DATA: u64 = 12;
const TAG_SAMPLES: u64 = 13;
const TAG_RESCALE: u64 = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub tau: f64,
    pub n: usize,
    pub alpha: f64,
    pub method: Method,
    pub rescaled: bool,
    pub center_draws: usize,
    pub seed: u64,
    pub zhang_k: usize,
    pub tukey_b: usize,
    /// Replicates of the worst-case search behind `α̃`.
    pub rescale_replicates: usize,
}

impl SimulationSpec {
    pub fn new(tau: f64, n: usize, method: Method, rescaled: bool) -> Self {
        SimulationSpec {
            tau,
            n,
            alpha: 0.1,
            method,
            rescaled,
            center_draws: 1000,
            seed: 0,
            zhang_k: zhang::DEFAULT_K,
            tukey_b: studentized::DEFAULT_SAMPLES,
            rescale_replicates: rescale::DEFAULT_REPLICATES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n < 2 {
            return Err(Error::TooFewItems { required: 2, got: self.n });
        }
        check_alpha(self.alpha)?;
        if self.center_draws == 0 || self.zhang_k == 0 || self.tukey_b == 0 || self.rescale_replicates == 0 {
            return Err(Error::invalid("all counts must be positive"));
        }
        Ok(())
    }

    fn settings(&self) -> MethodSettings {
        MethodSettings::new(self.method)
            .with_zhang_k(self.zhang_k)
            .with_tukey_samples(self.tukey_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    /// Level the intervals were built at (`α` or `α̃`).
    pub level: f64,
    pub coverage: CoverageEstimate,
    /// Mean of `1 − R̂_n` over the draws.
    pub efficiency: f64,
    pub efficiency_se: f64,
}

/// Rescaled level for `n` equal-variance means.
pub fn rescaled_level(spec: &SimulationSpec) -> Result<f64> {
    let cfg = RescaleConfig {
        replicates: spec.rescale_replicates,
        seed: rng::derive(spec.seed, TAG_RESCALE),
        tol: None,
    };
    Ok(rescale::rescale_alpha(&vec![1.0; spec.n], spec.alpha, &spec.settings(), &cfg)?.alpha_tilde)
}

pub fn run_cell(spec: &SimulationSpec) -> Result<CellResult> {
    spec.validate()?;
    let level = if spec.rescaled { rescaled_level(spec)? } else { spec.alpha };
    run_cell_at(spec, level)
}

/// Runs a cell with the intervals built at `level`.
pub fn run_cell_at(spec: &SimulationSpec, level: f64) -> Result<CellResult> {
    spec.validate()?;
    check_alpha(level)?;
    let n = spec.n;
    let sigma = vec![1.0; n];
    let settings = spec.settings();
    let q = match spec.method {
        Method::Tukey => CriticalValues::new(
            &sigma,
            QuantileMethod::Auto,
            spec.tukey_b,
            rng::derive(spec.seed, TAG_QUANTILE),
        )?
        .quantile(level)?,
        Method::Zhang => {
            let probe = settings.zhang_config(level, 0);
            probe.validate()?;
            probe.check_resolution()?;
            0.0
        }
    };
    let sample_seed = rng::derive(spec.seed, TAG_SAMPLES);
    let outcomes = rng::map_replicates(rng::derive(spec.seed, TAG_DATA), spec.center_draws, |r, d| {
        let mu: Vec<f64> = (0..n).map(|_| spec.tau * r.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = mu.iter().map(|m| m + r.sample::<f64, _>(StandardNormal)).collect();
        let intervals: Vec<RankInterval> = match spec.method {
            Method::Tukey => rank_bounds(&y, &sigma, q),
            Method::Zhang => {
                let cfg = settings.zhang_config(level, rng::derive(sample_seed, d as u64));
                fit_values(&y, &sigma, &cfg)?.intervals
            }
        };
        let covered = covers_all(&intervals, &set_ranks(&mu)?);
        Ok((covered, estimated_rankability(&intervals)?.efficiency()))
    });
    let draws = spec.center_draws;
    let mut hits = 0;
    let mut effs = Vec::with_capacity(draws);
    for o in outcomes {
        let (c, e): (bool, f64) = o?;
        hits += usize::from(c);
        effs.push(e);
    }
    let mean = effs.iter().sum::<f64>() / draws as f64;
    let var = if draws > 1 {
        effs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (draws - 1) as f64
    } else {
        0.0
    };
    Ok(CellResult {
        level,
        coverage: CoverageEstimate::from_hits(hits, draws, spec.seed),
        efficiency: mean,
        efficiency_se: (var / draws as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    /// The Monte-Carlo resolution cannot reach the required level.
    Infeasible,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub spec: SimulationSpec,
    pub status: CellStatus,
    pub result: Option<CellResult>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledLevel {
    pub n: usize,
    pub method: Method,
    pub alpha: f64,
    pub alpha_tilde: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub cells: Vec<CellOutcome>,
    pub rescaled_levels: Vec<RescaledLevel>,
}

fn outcome(spec: &SimulationSpec, res: Result<CellResult>) -> CellOutcome {
    let (status, result, message) = match res {
        Ok(r) => (CellStatus::Ok, Some(r), None),
        Err(e @ Error::ResolutionExhausted { .. }) => (CellStatus::Infeasible, None, Some(e.to_string())),
        Err(e) => (CellStatus::Error, None, Some(e.to_string())),
    };
    CellOutcome {
        spec: spec.clone(),
        status,
        result,
        message,
    }
}

/// Runs every cell; a failing cell is reported without stopping the others.
pub fn run_table(cells: &[SimulationSpec]) -> TableReport {
    type Key = (usize, Method, u64, usize, usize, usize, u64);
    let mut cache: BTreeMap<Key, Result<f64>> = BTreeMap::new();
    let mut order: Vec<Key> = Vec::new();
    let mut out = Vec::with_capacity(cells.len());
    for spec in cells {
        if let Err(e) = spec.validate() {
            out.push(outcome(spec, Err(e)));
            continue;
        }
        let level = if spec.rescaled {
            let key = (
                spec.n,
                spec.method,
                spec.alpha.to_bits(),
                spec.zhang_k,
                spec.tukey_b,
                spec.rescale_replicates,
                spec.seed,
            );
            if !cache.contains_key(&key) {
                order.push(key);
            }
            cache.entry(key).or_insert_with(|| rescaled_level(spec)).clone()
        } else {
            Ok(spec.alpha)
        };
        out.push(outcome(spec, level.and_then(|l| run_cell_at(spec, l))));
    }
    let rescaled_levels = order
        .into_iter()
        .map(|key| {
            let res = &cache[&key];
            RescaledLevel {
                n: key.0,
                method: key.1,
                alpha: f64::from_bits(key.2),
                alpha_tilde: res.as_ref().ok().copied(),
                message: res.as_ref().err().map(ToString::to_string),
            }
        })
        .collect();
    TableReport {
        cells: out,
        rescaled_levels,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

impl TableReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from(
            "tau\tn\talpha\tmethod\trescaled\tlevel\tcoverage\tcoverage_se\tefficiency\tefficiency_se\tstatus\n",
        );
        for c in &self.cells {
            let r = c.result.as_ref();
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.spec.tau,
                c.spec.n,
                c.spec.alpha,
                c.spec.method,
                c.spec.rescaled,
                opt(r.map(|r| r.level)),
                opt(r.map(|r| r.coverage.p_hat)),
                opt(r.map(|r| r.coverage.std_error)),
                opt(r.map(|r| r.efficiency)),
                opt(r.map(|r| r.efficiency_se)),
                serde_json::to_value(c.status).unwrap().as_str().unwrap(),
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Standard deviations of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaPattern {
    /// All ones.
    Equal,
    /// `(1/n, 1/(n − 1), …, 1)`.
    Reciprocal,
}

impl SigmaPattern {
    pub fn values(&self, n: usize) -> Vec<f64> {
        match self {
            SigmaPattern::Equal => vec![1.0; n],
            SigmaPattern::Reciprocal => (1..=n).rev().map(|k| 1.0 / k as f64).collect(),
        }
    }
}

impl std::str::FromStr for SigmaPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "equal" => Ok(SigmaPattern::Equal),
            "reciprocal" => Ok(SigmaPattern::Reciprocal),
            other => Err(Error::invalid(format!("unknown sigma pattern `{other}`"))),
        }
    }
}

/// Coverage along `ε·(1, …, n)` for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub n: usize,
    pub alpha: f64,
    pub method: Method,
    pub rescaled: bool,
    pub sigma: SigmaPattern,
    pub ordering: OrderingKind,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub zhang_k: usize,
    pub tukey_b: usize,
    pub rescale_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub name: String,
    pub level: f64,
    pub points: Vec<(f64, CoverageEstimate)>,
}

impl SweepSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,coverage,se\n");
        for (eps, est) in &self.points {
            let _ = writeln!(s, "{},{},{}", eps, est.p_hat, est.std_error);
        }
        s
    }
}

/// Evenly spaced `ε` values from `from` to `to` inclusive, snapped so that
/// grid points like `0` come out exact.
pub fn epsilon_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(Error::invalid("epsilon grid needs from ≤ to and a positive step"));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((from + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSeries> {
    if spec.n < 2 {
        return Err(Error::TooFewItems { required: 2, got: spec.n });
    }
    let settings = MethodSettings::new(spec.method)
        .with_zhang_k(spec.zhang_k)
        .with_tukey_samples(spec.tukey_b);
    let base_sigma = spec.sigma.values(spec.n);
    let sigma = SigmaOrdering::of_kind(spec.ordering, &base_sigma)?.apply(&base_sigma);
    let level = if spec.rescaled {
        let cfg = RescaleConfig {
            replicates: spec.rescale_replicates,
            seed: rng::derive(spec.seed, TAG_RESCALE),
            tol: None,
        };
        rescale::rescale_alpha(&sigma, spec.alpha, &settings, &cfg)?.alpha_tilde
    } else {
        spec.alpha
    };
    let mu_base: Vec<f64> = (1..=spec.n).map(|k| k as f64).collect();
    let points = epsilon_sweep(&mu_base, &sigma, level, &spec.grid, &settings, spec.replicates, spec.seed)?;
    Ok(SweepSeries {
        name: spec.name.clone(),
        level,
        points,
    })
}
