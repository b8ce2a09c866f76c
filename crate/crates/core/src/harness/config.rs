use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::framescore::IdfMode;
use crate::planner::{PlannerConfig, RefinementConfig, ThresholdStrategy, DEFAULT_MAX_SPEEDUP, DEFAULT_SPEEDUP};
use crate::selector::{CostWeights, SeamMode, DEFAULT_TAU};
use crate::topicspace::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOPIC_COUNT};

use super::pso::PsoConfig;
use super::HarnessError;

/// Input and output locations. Every entry is optional so that individual
/// stages only need what they read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub embeddings: Option<PathBuf>,
    pub topic_space: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
    pub user_bot: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub segments: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Weight of the Shaking Ratio in the tuning objective `F1 - w * shaking`.
pub const DEFAULT_SHAKING_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Target overall speed-up `S`.
    pub speedup: u32,
    /// Topic count `K`.
    pub topics: usize,
    pub kmeans_max_iterations: usize,
    pub fps: f64,
    /// Segment window in frames; four seconds of video when unset.
    pub window: Option<usize>,
    pub threshold: ThresholdStrategy,
    /// Longest frame skip considered by the selector.
    pub tau: usize,
    pub seams: SeamMode,
    pub s_max: u32,
    pub lambda1: f64,
    pub lambda2: f64,
    pub idf: IdfMode,
    /// Used when the features file does not carry the half frame diagonal.
    pub half_diagonal: Option<f64>,
    pub refinement: RefinementConfig,
    pub costs: CostWeights,
    pub shaking_weight: f64,
    pub pso: PsoConfig,
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            speedup: DEFAULT_SPEEDUP,
            topics: DEFAULT_TOPIC_COUNT,
            kmeans_max_iterations: DEFAULT_MAX_ITERATIONS,
            fps: 30.0,
            window: None,
            threshold: ThresholdStrategy::Mean,
            tau: DEFAULT_TAU,
            seams: SeamMode::Shared,
            s_max: DEFAULT_MAX_SPEEDUP,
            lambda1: 0.02,
            lambda2: 0.1,
            idf: IdfMode::Literal,
            half_diagonal: None,
            refinement: RefinementConfig::default(),
            costs: CostWeights::default(),
            shaking_weight: DEFAULT_SHAKING_WEIGHT,
            pso: PsoConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration is always serializable")
    }

    pub fn window(&self) -> usize {
        self.window.unwrap_or_else(|| (4.0 * self.fps).round().max(1.0) as usize)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.speedup == 0 {
            return fail("speedup must be at least 1");
        }
        if self.s_max < self.speedup {
            return fail("s_max must not be below speedup");
        }
        if self.topics == 0 {
            return fail("topics must be at least 1");
        }
        if !(self.fps > 0.0) || self.window == Some(0) {
            return fail("fps and window must be positive");
        }
        if self.tau == 0 {
            return fail("tau must be at least 1");
        }
        if !(self.refinement.gamma > 0.0) {
            return fail("refinement.gamma must be positive");
        }
        let c = &self.costs;
        if [c.lambda_s, c.lambda_i, c.lambda_m, c.lambda_a, self.lambda1, self.lambda2].iter().any(|l| !(*l >= 0.0)) {
            return fail("all lambda weights must be non-negative");
        }
        if !(c.epsilon > 0.0) {
            return fail("costs.epsilon must be positive");
        }
        if let ThresholdStrategy::Percentile(p) = self.threshold {
            if !(0.0..=100.0).contains(&p) {
                return fail("threshold percentile must lie in [0, 100]");
            }
        }
        Ok(())
    }

    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            window: self.window(),
            speedup: self.speedup,
            strategy: self.threshold,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            s_max: self.s_max,
            refinement: self.refinement,
        }
    }

    /// `[lambda1, lambda2, lambda_s, lambda_i, lambda_m, lambda_a]`.
    pub fn lambdas(&self) -> [f64; 6] {
        let c = &self.costs;
        [self.lambda1, self.lambda2, c.lambda_s, c.lambda_i, c.lambda_m, c.lambda_a]
    }

    pub fn with_lambdas(&self, l: &[f64]) -> Self {
        let mut cfg = self.clone();
        cfg.lambda1 = l[0];
        cfg.lambda2 = l[1];
        cfg.costs.lambda_s = l[2];
        cfg.costs.lambda_i = l[3];
        cfg.costs.lambda_m = l[4];
        cfg.costs.lambda_a = l[5];
        cfg
    }
}
