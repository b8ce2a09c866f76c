//! Global-best particle swarm optimization over a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PsoError {
    #[error("objective returned {value} at {position:?}")]
    Objective { position: Vec<f64>, value: f64 },
    #[error("invalid bounds for dimension {0}")]
    Bounds(usize),
    #[error("swarm needs at least one particle and one iteration")]
    EmptySwarm,
    #[error("seed particle has {found} coordinates, expected {expected}")]
    SeedDimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig { particles: 30, iterations: 200, inertia: 0.72, cognitive: 1.49, social: 1.49, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoIteration {
    pub positions: Vec<Vec<f64>>,
    pub best_value: f64,
    pub best_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    /// State after initialization followed by one entry per iteration.
    pub trace: Vec<PsoIteration>,
}

fn evaluate<F>(objective: &F, positions: &[Vec<f64>]) -> Result<Vec<f64>, PsoError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    positions
        .par_iter()
        .map(|p| {
            let value = objective(p);
            if value.is_finite() {
                Ok(value)
            } else {
                Err(PsoError::Objective { position: p.clone(), value })
            }
        })
        .collect()
}

/// Maximizes `objective` inside `bounds`. `seeds` are placed as the first
/// particles, so the result is never worse than any of them. Evaluation runs
/// in parallel; all randomness is drawn sequentially, so a fixed seed gives
/// the same trace.
pub fn pso_maximize<F>(
    objective: F,
    bounds: &[(f64, f64)],
    seeds: &[Vec<f64>],
    cfg: &PsoConfig,
) -> Result<PsoResult, PsoError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if cfg.particles == 0 {
        return Err(PsoError::EmptySwarm);
    }
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(PsoError::Bounds(d));
        }
    }
    let dim = bounds.len();
    if let Some(s) = seeds.iter().find(|s| s.len() != dim) {
        return Err(PsoError::SeedDimension { expected: dim, found: s.len() });
    }
    let clamp = |x: f64, d: usize| x.clamp(bounds[d].0, bounds[d].1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut positions: Vec<Vec<f64>> = (0..cfg.particles)
        .map(|i| match seeds.get(i) {
            Some(s) => s.iter().enumerate().map(|(d, &x)| clamp(x, d)).collect(),
            None => bounds.iter().map(|&(lo, hi)| if lo < hi { rng.random_range(lo..hi) } else { lo }).collect(),
        })
        .collect();
    let mut velocities: Vec<Vec<f64>> = (0..cfg.particles)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| {
                    let span = hi - lo;
                    if span > 0.0 { rng.random_range(-span..span) * 0.1 } else { 0.0 }
                })
                .collect()
        })
        .collect();

    let values = evaluate(&objective, &positions)?;
    let mut personal = positions.clone();
    let mut personal_value = values.clone();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let mut best_position = positions[best].clone();
    let mut best_value = values[best];
    let mut trace =
        vec![PsoIteration { positions: positions.clone(), best_value, best_position: best_position.clone() }];

    for _ in 0..cfg.iterations {
        for (p, x) in positions.iter_mut().enumerate() {
            let v = &mut velocities[p];
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                v[d] = cfg.inertia * v[d]
                    + cfg.cognitive * r1 * (personal[p][d] - x[d])
                    + cfg.social * r2 * (best_position[d] - x[d]);
                x[d] = clamp(x[d] + v[d], d);
            }
        }
        let values = evaluate(&objective, &positions)?;
        for (p, &value) in values.iter().enumerate() {
            if value > personal_value[p] {
                personal_value[p] = value;
                personal[p].clone_from(&positions[p]);
            }
            if value > best_value {
                best_value = value;
                best_position.clone_from(&positions[p]);
            }
        }
        trace.push(PsoIteration { positions: positions.clone(), best_value, best_position: best_position.clone() });
    }
    Ok(PsoResult { best_position, best_value, trace })
}
