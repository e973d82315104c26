use std::path::Path;

use clm_core::descriptors::{DescriptorKind, ExtractParams};
use clm_core::embedding::{EmbeddingParams, DEFAULT_BETA, DEFAULT_RHO};
use clm_core::gaussian::DEFAULT_EPSILON;
use clm_core::lrsvm::{DEFAULT_C, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use clm_core::pbr::PbrParams;
use clm_core::spm::PyramidSpec;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

/// Default `d / r`.
pub const DEFAULT_RANK_RATIO: usize = 100;

/// Every knob of a run. Unknown keys are rejected; missing keys take their
/// defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub beta: f64,
    pub rho: f64,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// Compression ratio `d / r`; `r = ⌊d / rank_ratio⌋`, at least 1.
    pub rank_ratio: usize,
    pub pyramid: Vec<[usize; 2]>,
    pub descriptor: String,
    pub cell_sizes: Vec<usize>,
    pub step: usize,
    pub logcov_patch: usize,
    pub pbr: bool,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// When set, `train` and `eval` use a seeded split with this many
    /// training images per class.
    pub train_per_class: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let extract = ExtractParams::default();
        Self {
            beta: DEFAULT_BETA,
            rho: DEFAULT_RHO,
            epsilon: DEFAULT_EPSILON,
            c: DEFAULT_C,
            rank_ratio: DEFAULT_RANK_RATIO,
            pyramid: PyramidSpec::default().levels().iter().map(|&(r, c)| [r, c]).collect(),
            descriptor: extract.kind.name().to_string(),
            cell_sizes: extract.cell_sizes,
            step: extract.step,
            logcov_patch: extract.logcov_patch,
            pbr: false,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            seed: 0,
            train_per_class: None,
        }
    }
}

fn bad(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.embedding()?;
        self.pyramid_spec()?;
        self.extract_params()?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(bad(format!("epsilon {} must be finite and non-negative", self.epsilon)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(bad(format!("C {} must be positive", self.c)));
        }
        if self.rank_ratio == 0 {
            return Err(bad("rank_ratio must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(bad("max_iters must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(bad(format!("tol {} must be positive", self.tol)));
        }
        if self.train_per_class == Some(0) {
            return Err(bad("train_per_class must be at least 1"));
        }
        Ok(())
    }

    pub fn embedding(&self) -> Result<EmbeddingParams<f64>> {
        EmbeddingParams::new(self.beta, self.rho).map_err(|e| bad(e.to_string()))
    }

    pub fn pyramid_spec(&self) -> Result<PyramidSpec> {
        PyramidSpec::new(self.pyramid.iter().map(|&[r, c]| (r, c)).collect()).map_err(|e| bad(e.to_string()))
    }

    pub fn extract_params(&self) -> Result<ExtractParams> {
        let kind = DescriptorKind::from_name(&self.descriptor)
            .ok_or_else(|| bad(format!("unknown descriptor {:?}", self.descriptor)))?;
        if self.step == 0 {
            return Err(bad("step must be at least 1"));
        }
        if matches!(kind, DescriptorKind::Grad | DescriptorKind::EnrichedGrad)
            && (self.cell_sizes.is_empty() || self.cell_sizes.contains(&0))
        {
            return Err(bad("cell_sizes must be a non-empty list of positive sizes"));
        }
        if matches!(kind, DescriptorKind::LogCov | DescriptorKind::EnrichedLogCov) && self.logcov_patch < 8 {
            return Err(bad("logcov_patch must be at least 8"));
        }
        Ok(ExtractParams {
            kind,
            cell_sizes: self.cell_sizes.clone(),
            step: self.step,
            logcov_patch: self.logcov_patch,
        })
    }

    pub fn pbr_params(&self) -> Option<PbrParams> {
        self.pbr.then(PbrParams::default)
    }

    /// `r = ⌊d / rank_ratio⌋` clamped to `[1, limit]`.
    pub fn rank_for(&self, block_dim: usize, limit: usize) -> usize {
        (block_dim / self.rank_ratio).max(1).min(limit).min(block_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(cfg.to_json().contains("\"C\": 10.0"));
    }

    #[test]
    fn partial_json_takes_defaults() {
        let cfg = RunConfig::from_json(r#"{"beta": 0.0, "pyramid": [[1, 1], [2, 2]]}"#).unwrap();
        assert_eq!(cfg.beta, 0.0);
        assert_eq!(cfg.pyramid_spec().unwrap().block_count(), 5);
        assert_eq!(cfg.rho, DEFAULT_RHO);
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            r#"{"rho": 0.0}"#,
            r#"{"rho": 1.5}"#,
            r#"{"beta": -1.0}"#,
            r#"{"C": 0.0}"#,
            r#"{"descriptor": "hog"}"#,
            r#"{"rank_ratio": 0}"#,
            r#"{"pyramid": []}"#,
            r#"{"cell_sizes": []}"#,
            r#"{"unknown": 1}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(PipelineError::Config(_))), "{text}");
        }
    }

    #[test]
    fn rank_rounds_down_and_clamps() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.rank_for(9180, 10_000), 91);
        assert_eq!(cfg.rank_for(50, 10_000), 1);
        assert_eq!(cfg.rank_for(9180, 40), 40);
    }
}
