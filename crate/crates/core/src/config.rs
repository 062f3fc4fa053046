//! Tolerances, search budgets and the seed shared by every analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Threshold below which `|𝔸^k(ξ)λ|` on the sphere counts as zero,
    /// relative to the operator's coefficient scale.
    pub tol_zero: f64,
    /// Relative singular-value cutoff for ranks and kernels.
    pub tol_rank: f64,
    /// Random planes tried per λ (on top of the deterministic grid).
    pub plane_budget: usize,
    /// Random λ tried per triviality question (on top of the grid).
    pub lambda_budget: usize,
    /// Base resolution of deterministic sphere and plane grids.
    pub resolution: usize,
    /// Sample count for the constant-rank check.
    pub rank_samples: usize,
    /// Cap on branch-and-bound cell evaluations per certification.
    pub max_cells: usize,
    /// Use the closed-form classification of builtin operators when it
    /// applies; off forces the generic search and certification paths.
    pub closed_forms: bool,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            tol_zero: 1e-8,
            tol_rank: 1e-10,
            plane_budget: 64,
            lambda_budget: 64,
            resolution: 8,
            rank_samples: 10_000,
            max_cells: 2_000_000,
            closed_forms: true,
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol_zero", self.tol_zero), ("tol_rank", self.tol_rank)] {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.resolution == 0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        if self.max_cells == 0 {
            return Err(Error::invalid("max_cells must be positive"));
        }
        Ok(())
    }

    /// Parse a JSON config document; missing keys take their defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
