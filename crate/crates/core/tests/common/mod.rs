#![allow(dead_code)]

pub mod criteria;
pub mod fixture;
pub mod oracles;
pub mod props;

use hyperlapse::harness::pipeline::{plan_video, uniform_baseline};
use hyperlapse::harness::synth::SyntheticSuite;
use hyperlapse::harness::tune::synthetic_cases;
use hyperlapse::harness::PipelineConfig;
use hyperlapse::metrics::{evaluate, MetricsReport};

pub struct PairResult {
    pub user: String,
    pub video: usize,
    pub ours: MetricsReport,
    pub uniform: MetricsReport,
}

/// Evaluates the personalized plan and the uniform baseline for every
/// (user, video) pair of a suite.
pub fn run_suite(suite: &SyntheticSuite, cfg: &PipelineConfig) -> Vec<PairResult> {
    let cases = synthetic_cases(suite, cfg).unwrap();
    let users = suite.users.len();
    let target = cfg.speedup as f64;
    cases
        .iter()
        .enumerate()
        .map(|(i, case)| {
            let (_, plan) = plan_video(&case.profile, &case.features, cfg).unwrap();
            let uniform = uniform_baseline(case.profile.len(), cfg.speedup);
            PairResult {
                user: suite.users[i % users].source_id.clone(),
                video: i / users,
                ours: evaluate(&plan, &case.truth, &case.features, target).unwrap(),
                uniform: evaluate(&uniform, &case.truth, &case.features, target).unwrap(),
            }
        })
        .collect()
}
