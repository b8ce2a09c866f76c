//! Checks shared by the synthetic tests and the acceptance report. Each
//! returns a one-line summary on success and the failure reason otherwise.

use hyperlapse::harness::pso::{pso_maximize, PsoConfig};
use hyperlapse::harness::synth::SyntheticSuite;
use hyperlapse::harness::tune::{synthetic_cases, tune_lambdas};
use hyperlapse::harness::PipelineConfig;

use super::{run_suite, PairResult};

/// The desk-scale suite: 5 users, 5 videos of 3000 frames.
pub fn desk_suite() -> (SyntheticSuite, Vec<PairResult>) {
    let suite = SyntheticSuite::generate(5, 3000, 42);
    let results = run_suite(&suite, &PipelineConfig::default());
    (suite, results)
}

pub fn personalization(results: &[PairResult]) -> Result<String, String> {
    let losers: Vec<String> = results
        .iter()
        .filter(|r| r.ours.f1 <= r.uniform.f1)
        .map(|r| format!("{}/video{} ({:.3} vs {:.3})", r.user, r.video, r.ours.f1, r.uniform.f1))
        .collect();
    let gain = results.iter().map(|r| r.ours.f1 - r.uniform.f1).sum::<f64>() / results.len() as f64;
    let summary = format!("{} pairs, mean F1 gain {:.1} points", results.len(), 100.0 * gain);
    if !losers.is_empty() {
        return Err(format!("{summary}; not above uniform: {}", losers.join(", ")));
    }
    if gain < 0.05 {
        return Err(format!("{summary}; below 5 points"));
    }
    Ok(summary)
}

pub fn speedup_accuracy(results: &[PairResult]) -> Result<String, String> {
    let worst = results.iter().map(|r| r.ours.speedup_deviation).fold(0.0, f64::max);
    let mean = results.iter().map(|r| r.ours.speedup_deviation).sum::<f64>() / results.len() as f64;
    let summary = format!("max |S - S_hat| {worst:.3}, mean {mean:.3}");
    if worst <= 1.0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

pub fn pso_sphere() -> Result<String, String> {
    let sphere = |x: &[f64]| -x.iter().map(|v| v * v).sum::<f64>();
    let cfg = PsoConfig { particles: 30, iterations: 200, seed: 7, ..PsoConfig::default() };
    let r = pso_maximize(sphere, &[(-5.0, 5.0); 3], &[], &cfg).map_err(|e| e.to_string())?;
    let best = -r.best_value;
    if best < 1e-3 {
        Ok(format!("sphere minimum {best:.2e}"))
    } else {
        Err(format!("sphere minimum {best:.2e} not below 1e-3"))
    }
}

/// Tunes on one video and all five users with a small swarm; each objective
/// evaluation plans five videos.
pub fn pso_tuning() -> Result<String, String> {
    let suite = SyntheticSuite::generate(1, 3000, 42);
    let mut cfg = PipelineConfig::default();
    cfg.pso = PsoConfig { particles: 8, iterations: 6, seed: 11, ..PsoConfig::default() };
    let cases = synthetic_cases(&suite, &cfg).map_err(|e| e.to_string())?;
    let r = tune_lambdas(&cases, &cfg).map_err(|e| e.to_string())?;
    let summary = format!("tuned objective {:.4}, defaults {:.4}", r.objective, r.default_objective);
    if r.objective >= r.default_objective {
        Ok(summary)
    } else {
        Err(summary)
    }
}
