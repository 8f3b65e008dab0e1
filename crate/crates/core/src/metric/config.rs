use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::error::{KobaError, Result};

/// Which integrand the path optimizer minimizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// Closed-form metric where the domain kind has one, sandwich otherwise.
    #[default]
    Auto,
    /// Always `||v|| / delta(z; v)`.
    Sandwich,
    /// Closed-form metric; unsupported kinds are rejected.
    Exact,
}

/// Affine map `z -> M z + shift` into the product of left half-planes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingChoice {
    Off,
    /// Built-in embedding for kinds that have one.
    #[default]
    Auto,
    Affine {
        rows: Vec<CVec<f64>>,
        shift: CVec<f64>,
    },
}

/// Solver parameters; the JSON config record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub n_theta: usize,
    pub n_nodes: usize,
    pub quad: usize,
    pub tol_rel: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    pub integrand: Integrand,
    pub embedding: EmbeddingChoice,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            n_theta: 64,
            n_nodes: 33,
            quad: 16,
            tol_rel: 1e-8,
            max_sweeps: 500,
            seed: 0,
            integrand: Integrand::Auto,
            embedding: EmbeddingChoice::Auto,
        }
    }
}

impl MetricConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)
            .map_err(|e| KobaError::InvalidInput(format!("metric config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(KobaError::InvalidInput(m.into()));
        if self.n_theta < 4 {
            return bad("n_theta must be at least 4");
        }
        if self.n_nodes < 2 {
            return bad("n_nodes must be at least 2");
        }
        if !(2..=64).contains(&self.quad) {
            return bad("quad must lie in 2..=64");
        }
        if !(self.tol_rel > 0.0 && self.tol_rel < 1.0) {
            return bad("tol_rel must lie in (0, 1)");
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be positive");
        }
        Ok(())
    }

    pub fn with_nodes(mut self, n: usize) -> Self {
        self.n_nodes = n;
        self
    }

    pub fn with_integrand(mut self, i: Integrand) -> Self {
        self.integrand = i;
        self
    }
}
