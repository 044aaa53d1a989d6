//! Method choice plus the Monte-Carlo knobs of both methods.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Method, Observations, RankCiResult};
use crate::studentized::{self, QuantileMethod};
use crate::tukey::{tukey_rank_cis, TukeyConfig};
use crate::zhang::{self, zhang_simultaneous_cis, ZhangConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSettings {
    pub method: Method,
    /// Draws of the studentized range when `σ` is unequal.
    pub tukey_samples: usize,
    pub zhang_k: usize,
    pub zhang_precision: f64,
    pub zhang_maxiter: usize,
}

impl MethodSettings {
    pub fn new(method: Method) -> Self {
        MethodSettings {
            method,
            tukey_samples: studentized::DEFAULT_SAMPLES,
            zhang_k: zhang::DEFAULT_K,
            zhang_precision: 1e-6,
            zhang_maxiter: 50,
        }
    }

    pub fn tukey() -> Self {
        Self::new(Method::Tukey)
    }

    pub fn zhang() -> Self {
        Self::new(Method::Zhang)
    }

    pub fn with_zhang_k(mut self, k: usize) -> Self {
        self.zhang_k = k;
        self
    }

    pub fn with_tukey_samples(mut self, samples: usize) -> Self {
        self.tukey_samples = samples;
        self
    }

    pub fn tukey_config(&self, seed: u64) -> TukeyConfig {
        TukeyConfig {
            quantile_override: None,
            method: QuantileMethod::Auto,
            samples: self.tukey_samples,
            seed,
        }
    }

    pub fn zhang_config(&self, alpha: f64, seed: u64) -> ZhangConfig {
        ZhangConfig {
            alpha,
            k: self.zhang_k,
            precision: self.zhang_precision,
            maxiter: self.zhang_maxiter,
            seed,
        }
    }
}

/// Simultaneous `1 − α` rank intervals with the chosen method.
pub fn rank_cis(obs: &Observations, alpha: f64, settings: &MethodSettings, seed: u64) -> Result<RankCiResult> {
    match settings.method {
        Method::Tukey => tukey_rank_cis(obs, alpha, &settings.tukey_config(seed)),
        Method::Zhang => zhang_simultaneous_cis(obs, &settings.zhang_config(alpha, seed)),
    }
}
