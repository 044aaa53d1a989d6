//! Plain-text simulation configs.
//!
//! ```text
//! # comment
//! [defaults]
//! alpha = 0.1
//! seed = 7
//!
//! [grid]
//! tau = 0.5
//! n = 10, 30
//! method = tukey, zhang
//! rescaled = false, true
//!
//! [sweep]
//! name = tukey_raw
//! n = 10
//! method = tukey
//! eps_from = -1
//! eps_to = 1
//! eps_step = 0.1
//! ```
//!
//! Keys in `[defaults]` apply to every later section; besides the shared
//! keys it may hold the sweep keys `sigma`, `ordering` and `eps_*`. A `[grid]` expands to
//! the product of its comma-separated lists, ordered by `tau`, `n`,
//! `rescaled`, `method`, then `alpha`. Each `[sweep]` is one coverage curve.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Method;
use crate::rescale::OrderingKind;
use crate::simulation::{epsilon_grid, SigmaPattern, SimulationSpec, SweepSpec};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationConfig {
    pub cells: Vec<SimulationSpec>,
    pub sweeps: Vec<SweepSpec>,
}

impl SimulationConfig {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.sweeps.is_empty()
    }
}

const SHARED_KEYS: &[&str] = &[
    "alpha",
    "seed",
    "center_draws",
    "zhang_k",
    "tukey_b",
    "rescale_replicates",
    "replicates",
];
/// Sweep keys that may also be given once in `[defaults]`.
const SWEEP_DEFAULT_KEYS: &[&str] = &["sigma", "ordering", "eps_from", "eps_to", "eps_step"];
const GRID_KEYS: &[&str] = &["tau", "n", "method", "rescaled"];
const SWEEP_KEYS: &[&str] = &[
    "name", "n", "method", "rescaled", "sigma", "ordering", "eps_from", "eps_to", "eps_step",
];

type Entries = BTreeMap<String, (String, usize)>;

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("config line {line}: {msg}"))
}

fn parse_one<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| bad(line, format!("cannot parse `{raw}` for `{key}`")))
}

fn list<T: FromStr>(entries: &Entries, key: &str) -> Result<Option<Vec<T>>> {
    entries
        .get(key)
        .map(|(raw, line)| raw.split(',').map(|part| parse_one(key, part, *line)).collect())
        .transpose()
}

fn scalar<T: FromStr>(entries: &Entries, key: &str) -> Result<Option<T>> {
    entries
        .get(key)
        .map(|(raw, line)| parse_one(key, raw, *line))
        .transpose()
}

fn required<T>(value: Option<T>, key: &str, section: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(format!("[{section}] section is missing `{key}`")))
}

struct Shared {
    alpha: Vec<f64>,
    seed: u64,
    center_draws: usize,
    zhang_k: usize,
    tukey_b: usize,
    rescale_replicates: usize,
    replicates: usize,
}

fn shared(e: &Entries) -> Result<Shared> {
    let base = SimulationSpec::new(1.0, 2, Method::Tukey, false);
    Ok(Shared {
        alpha: list(e, "alpha")?.unwrap_or(vec![base.alpha]),
        seed: scalar(e, "seed")?.unwrap_or(base.seed),
        center_draws: scalar(e, "center_draws")?.unwrap_or(base.center_draws),
        zhang_k: scalar(e, "zhang_k")?.unwrap_or(base.zhang_k),
        tukey_b: scalar(e, "tukey_b")?.unwrap_or(base.tukey_b),
        rescale_replicates: scalar(e, "rescale_replicates")?.unwrap_or(base.rescale_replicates),
        replicates: scalar(e, "replicates")?.unwrap_or(1000),
    })
}

fn expand_grid(e: &Entries, out: &mut Vec<SimulationSpec>) -> Result<()> {
    let s = shared(e)?;
    let taus: Vec<f64> = required(list(e, "tau")?, "tau", "grid")?;
    let ns: Vec<usize> = required(list(e, "n")?, "n", "grid")?;
    let methods: Vec<Method> = required(list(e, "method")?, "method", "grid")?;
    let rescaled: Vec<bool> = list(e, "rescaled")?.unwrap_or(vec![false]);
    for &tau in &taus {
        for &n in &ns {
            for &r in &rescaled {
                for &method in &methods {
                    for &alpha in &s.alpha {
                        out.push(SimulationSpec {
                            tau,
                            n,
                            alpha,
                            method,
                            rescaled: r,
                            center_draws: s.center_draws,
                            seed: s.seed,
                            zhang_k: s.zhang_k,
                            tukey_b: s.tukey_b,
                            rescale_replicates: s.rescale_replicates,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn sweep(e: &Entries, index: usize) -> Result<SweepSpec> {
    let s = shared(e)?;
    if s.alpha.len() != 1 {
        return Err(Error::invalid("a sweep takes a single alpha"));
    }
    let grid = epsilon_grid(
        scalar(e, "eps_from")?.unwrap_or(-1.0),
        scalar(e, "eps_to")?.unwrap_or(1.0),
        scalar(e, "eps_step")?.unwrap_or(0.1),
    )?;
    Ok(SweepSpec {
        name: scalar(e, "name")?.unwrap_or_else(|| format!("sweep{index}")),
        n: required(scalar(e, "n")?, "n", "sweep")?,
        alpha: s.alpha[0],
        method: required(scalar(e, "method")?, "method", "sweep")?,
        rescaled: scalar(e, "rescaled")?.unwrap_or(false),
        sigma: scalar::<SigmaPattern>(e, "sigma")?.unwrap_or(SigmaPattern::Equal),
        ordering: scalar::<OrderingKind>(e, "ordering")?.unwrap_or(OrderingKind::Ascending),
        grid,
        replicates: s.replicates,
        seed: s.seed,
        zhang_k: s.zhang_k,
        tukey_b: s.tukey_b,
        rescale_replicates: s.rescale_replicates,
    })
}

pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut defaults = Entries::new();
    let mut sections: Vec<(String, Entries)> = Vec::new();
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim().to_string();
            match name.as_str() {
                "defaults" => {}
                "grid" | "sweep" => sections.push((name.clone(), Entries::new())),
                other => return Err(bad(line, format!("unknown section `[{other}]`"))),
            }
            current = Some(name);
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| bad(line, "expected `key = value`"))?;
        let key = key.trim().to_string();
        let section = current
            .as_deref()
            .ok_or_else(|| bad(line, "key outside of a section"))?;
        let allowed = SHARED_KEYS.contains(&key.as_str())
            || (section == "defaults" && SWEEP_DEFAULT_KEYS.contains(&key.as_str()))
            || (section == "grid" && GRID_KEYS.contains(&key.as_str()))
            || (section == "sweep" && SWEEP_KEYS.contains(&key.as_str()));
        if !allowed {
            return Err(bad(line, format!("unknown key `{key}` in [{section}]")));
        }
        let target = if section == "defaults" {
            &mut defaults
        } else {
            &mut sections.last_mut().expect("section pushed").1
        };
        if target.insert(key.clone(), (value.trim().to_string(), line)).is_some() {
            return Err(bad(line, format!("duplicate key `{key}`")));
        }
    }
    let mut cfg = SimulationConfig::default();
    for (name, own) in sections {
        let mut merged = defaults.clone();
        merged.extend(own);
        if name == "grid" {
            expand_grid(&merged, &mut cfg.cells)?;
        } else {
            let index = cfg.sweeps.len();
            cfg.sweeps.push(sweep(&merged, index)?);
        }
    }
    Ok(cfg)
}
