//! Plan evaluation: frame-level F1, speed-up deviation and Shaking Ratio.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::selector::{SelectionPlan, TransitionFeatures};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ground truth has no relevant frames")]
    EmptyGroundTruth,
    #[error("plan keeps fewer than two frames")]
    DegeneratePlan,
    #[error("{file}, line {line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Frames deemed relevant for one user.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub relevant: BTreeSet<usize>,
}

impl GroundTruth {
    pub fn new(relevant: impl IntoIterator<Item = usize>) -> Self {
        GroundTruth { relevant: relevant.into_iter().collect() }
    }

    /// One frame index per line.
    pub fn read_from<R: BufRead>(reader: R, file: &str) -> Result<Self> {
        let mut relevant = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            relevant.insert(t.parse().map_err(|_| MetricsError::Format {
                file: file.to_string(),
                line: i + 1,
                reason: "expected a frame index".into(),
            })?);
        }
        Ok(GroundTruth { relevant })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_from(BufReader::new(File::open(path)?), &path.display().to_string())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for f in &self.relevant {
            writeln!(out, "{f}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1_score(selected: &[usize], truth: &GroundTruth) -> Result<F1Score> {
    if truth.relevant.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let kept: BTreeSet<usize> = selected.iter().copied().collect();
    let hits = kept.intersection(&truth.relevant).count() as f64;
    let precision = if kept.is_empty() { 0.0 } else { hits / kept.len() as f64 };
    let recall = hits / truth.relevant.len() as f64;
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(F1Score { precision, recall, f1 })
}

/// `|S - F / kept|`.
pub fn speedup_deviation(total_frames: usize, selected_count: usize, target: f64) -> f64 {
    (target - total_frames as f64 / selected_count as f64).abs()
}

/// Center displacement across each output transition, composed from the
/// consecutive-frame displacements it skips over. A transition is `None` if
/// any step inside it failed.
pub fn output_displacements(selected: &[usize], features: &TransitionFeatures) -> Vec<Option<f64>> {
    let disp = features.center_disp();
    selected
        .windows(2)
        .map(|w| disp[w[0]..w[1]].iter().try_fold(0.0, |acc, d| d.map(|d| acc + d)))
        .collect()
}

/// Mean normalized center motion over output transitions. Failed transitions
/// are charged the largest valid motion; when every transition failed the
/// result is `+inf`.
pub fn shaking_ratio_from(displacements: &[Option<f64>], half_diag: f64) -> Result<f64> {
    if displacements.is_empty() {
        return Err(MetricsError::DegeneratePlan);
    }
    let Some(max) = displacements.iter().flatten().copied().reduce(f64::max) else {
        warn!("no transition has a valid homography; shaking ratio is infinite");
        return Ok(f64::INFINITY);
    };
    let total: f64 = displacements.iter().map(|d| d.unwrap_or(max) / half_diag).sum();
    Ok(total / displacements.len() as f64)
}

pub fn shaking_ratio(plan: &SelectionPlan, features: &TransitionFeatures) -> Result<f64> {
    if plan.selected.len() < 2 {
        return Err(MetricsError::DegeneratePlan);
    }
    shaking_ratio_from(&output_displacements(&plan.selected, features), features.half_diag())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub speedup_deviation: f64,
    pub achieved_rate: f64,
    pub shaking_ratio: f64,
}

pub fn evaluate(
    plan: &SelectionPlan,
    truth: &GroundTruth,
    features: &TransitionFeatures,
    target: f64,
) -> Result<MetricsReport> {
    let f1 = f1_score(&plan.selected, truth)?;
    Ok(MetricsReport {
        f1: f1.f1,
        precision: f1.precision,
        recall: f1.recall,
        speedup_deviation: speedup_deviation(plan.total_frames, plan.selected.len(), target),
        achieved_rate: plan.achieved_rate,
        shaking_ratio: shaking_ratio(plan, features)?,
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<18} {:>10}", "metric", "value")?;
        writeln!(f, "{:<18} {:>10.4}", "f1", self.f1)?;
        writeln!(f, "{:<18} {:>10.4}", "precision", self.precision)?;
        writeln!(f, "{:<18} {:>10.4}", "recall", self.recall)?;
        writeln!(f, "{:<18} {:>10.4}", "achieved_rate", self.achieved_rate)?;
        writeln!(f, "{:<18} {:>10.4}", "speedup_deviation", self.speedup_deviation)?;
        write!(f, "{:<18} {:>10.4}", "shaking_ratio", self.shaking_ratio)
    }
}
