//! Tuning of the planner and selector weights with PSO.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::framescore::InterestProfile;
use crate::metrics::{evaluate, GroundTruth};
use crate::selector::TransitionFeatures;
use crate::topicspace::build_topic_space_with;

use super::pipeline::{plan_video, Resources};
use super::pso::{pso_maximize, PsoResult};
use super::synth::SyntheticSuite;
use super::{HarnessError, PipelineConfig};

/// One scored video with its ground truth. Scores do not depend on the tuned
/// weights, so they are computed once.
#[derive(Debug, Clone)]
pub struct TuningCase {
    pub profile: InterestProfile,
    pub features: TransitionFeatures,
    pub truth: GroundTruth,
}

/// Scores every user of a synthetic suite against every video. Cases are
/// ordered video-major. The topic space uses one topic per word group.
pub fn synthetic_cases(suite: &SyntheticSuite, cfg: &PipelineConfig) -> Result<Vec<TuningCase>, HarnessError> {
    let table = suite.world.table()?;
    let space = build_topic_space_with(&table, suite.world.topic_count(), cfg.seed, cfg.kmeans_max_iterations)?;
    let res = Resources::new(table, space, suite.world.sentiment(), suite.world.extractor())?;
    let bots = suite.users.iter().map(|u| res.user_bot(u)).collect::<Result<Vec<_>, _>>()?;
    let mut cases = Vec::new();
    for video in &suite.videos {
        let scorer = res.scorer(&video.annotations, cfg)?;
        for (user, bot) in suite.users.iter().zip(&bots) {
            let truth = video.truths.get(&user.source_id).cloned().ok_or_else(|| {
                HarnessError::Consistency(format!("no ground truth for {}", user.source_id))
            })?;
            cases.push(TuningCase {
                profile: scorer.score(bot, &video.annotations)?,
                features: video.features.clone(),
                truth,
            });
        }
    }
    Ok(cases)
}

/// Search box for `[lambda1, lambda2, lambda_s, lambda_i, lambda_m, lambda_a]`.
pub const LAMBDA_BOUNDS: [(f64, f64); 6] = [(0.0, 0.5), (0.0, 0.5), (0.0, 4.0), (0.0, 4.0), (0.0, 0.5), (0.0, 4.0)];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneResult {
    pub lambdas: Vec<f64>,
    pub objective: f64,
    pub default_objective: f64,
    pub search: PsoResult,
}

/// Mean of `F1 - shaking_weight * shaking` over the cases.
pub fn tuning_objective(cases: &[TuningCase], cfg: &PipelineConfig) -> Result<f64, HarnessError> {
    let mut total = 0.0;
    for case in cases {
        let (_, plan) = plan_video(&case.profile, &case.features, cfg)?;
        let report = evaluate(&plan, &case.truth, &case.features, cfg.speedup as f64)?;
        total += report.f1 - cfg.shaking_weight * report.shaking_ratio;
    }
    Ok(total / cases.len().max(1) as f64)
}

/// Maximizes the tuning objective with the configuration's weights seeded
/// as one particle, so the result is never below the defaults.
pub fn tune_lambdas(cases: &[TuningCase], base: &PipelineConfig) -> Result<TuneResult, HarnessError> {
    if cases.is_empty() {
        return Err(HarnessError::Config("tuning needs at least one case".into()));
    }
    let default_objective = tuning_objective(cases, base)?;
    info!("default objective {default_objective:.4}");
    let objective = |l: &[f64]| match tuning_objective(cases, &base.with_lambdas(l)) {
        Ok(v) => v,
        Err(e) => {
            warn!("objective failed at {l:?}: {e}");
            f64::NAN
        }
    };
    let search = pso_maximize(objective, &LAMBDA_BOUNDS, &[base.lambdas().to_vec()], &base.pso)?;
    info!("tuned objective {:.4} at {:?}", search.best_value, search.best_position);
    Ok(TuneResult {
        lambdas: search.best_position.clone(),
        objective: search.best_value,
        default_objective,
        search,
    })
}
