//! JSON and TSV renderings of a rank-interval computation.

use std::fmt::Write as _;

use rankgauge::{estimated_rankability, Method, Observations, RankCiResult, Rankability};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemReport {
    pub id: String,
    pub y: f64,
    pub sigma: f64,
    pub rank_lower: usize,
    pub rank_upper: usize,
}

/// Everything `rankgauge ranks` reports. Its `items` can be fed back in as input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RanksReport {
    pub method: Method,
    pub alpha_nominal: f64,
    pub alpha_effective: f64,
    pub seed: u64,
    pub items: Vec<ItemReport>,
    /// Absent for a single item.
    pub rankability: Option<Rankability>,
}

impl RanksReport {
    pub fn new(obs: &Observations, res: &RankCiResult) -> Self {
        let items = obs
            .items()
            .iter()
            .zip(&res.intervals)
            .map(|(it, ci)| ItemReport {
                id: it.id.clone(),
                y: it.y,
                sigma: it.sigma,
                rank_lower: ci.lower,
                rank_upper: ci.upper,
            })
            .collect();
        RanksReport {
            method: res.method,
            alpha_nominal: res.alpha_nominal,
            alpha_effective: res.alpha_effective,
            seed: res.seed,
            items,
            rankability: estimated_rankability(&res.intervals).ok(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# method\t{}", self.method);
        let _ = writeln!(s, "# alpha_nominal\t{}", self.alpha_nominal);
        let _ = writeln!(s, "# alpha_effective\t{}", self.alpha_effective);
        let _ = writeln!(s, "# seed\t{}", self.seed);
        match &self.rankability {
            Some(r) => {
                let _ = writeln!(s, "# rankability\t{}\t[{}, {}]", r.estimate, r.ci_lower, r.ci_upper);
            }
            None => s.push_str("# rankability\tNA\n"),
        }
        s.push_str("id\ty\tsigma\trank_lower\trank_upper\n");
        for it in &self.items {
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", it.id, it.y, it.sigma, it.rank_lower, it.rank_upper);
        }
        s
    }
}
