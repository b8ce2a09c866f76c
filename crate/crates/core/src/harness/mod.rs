//! Configuration, end-to-end pipeline, synthetic corpus and tuning.

pub mod config;
pub mod pipeline;
pub mod pso;
pub mod synth;
pub mod tune;

use thiserror::Error;

use crate::framescore::ScoreError;
use crate::metrics::MetricsError;
use crate::planner::PlanError;
use crate::selector::SelectError;
use crate::topicspace::TopicError;
use crate::userprofile::ProfileError;

pub use config::{Paths, PipelineConfig};
pub use pipeline::{run_pipeline, uniform_baseline, PipelineOutput, Resources};
pub use pso::{pso_maximize, PsoConfig, PsoError, PsoResult};
pub use synth::{gen_synthetic, SyntheticSpec, SyntheticSuite, SyntheticVideo, SyntheticWorld};
pub use tune::{synthetic_cases, tune_lambdas, TuneResult, TuningCase};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("no path configured for {0}")]
    MissingPath(&'static str),
    #[error("input file {0} does not exist")]
    MissingFile(std::path::PathBuf),
    #[error("inconsistent inputs: {0}")]
    Consistency(String),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Pso(#[from] PsoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// True when the error points at bad input rather than a defect.
    pub fn is_validation(&self) -> bool {
        !matches!(self, HarnessError::Pso(_) | HarnessError::Select(SelectError::PlanOverlap(_)))
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            1
        }
    }
}
