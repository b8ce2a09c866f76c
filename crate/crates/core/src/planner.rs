//! Segment-level speed-up planning.
//!
//! The interest profile is cut into fixed windows, windows are classified as
//! relevant or not by a semantic threshold, and the two speed-up rates are
//! chosen by exhaustive search over the integer grid. Relevant content is
//! then refined hierarchically so the most interesting windows get the
//! lowest rates.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::framescore::InterestProfile;

pub const DEFAULT_SPEEDUP: u32 = 10;
pub const DEFAULT_MAX_SPEEDUP: u32 = 100;
pub const DEFAULT_GAMMA: f64 = 0.2;
pub const DEFAULT_MAX_LEVELS: usize = 5;

/// Relative slack under which two objective values count as a tie.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("interest profile is empty")]
    EmptyVideo,
    #[error("segment window must be at least one frame")]
    InvalidWindow,
    #[error("maximum speed-up {s_max} is below the target {target}")]
    InfeasibleBounds { target: u32, s_max: u32 },
    #[error("target speed-up must be at least 1")]
    InvalidTarget,
    #[error("{file}, line {line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PlanError>;

/// A contiguous run of frames `start..=end` with one speed-up rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub mean_score: f64,
    /// Class assigned by the first-level semantic threshold.
    pub relevant: bool,
    pub speedup: u32,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frames(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fixed windows of `window` frames. A trailing remainder shorter than half
/// a window joins the previous segment; otherwise it stands alone.
pub fn partition(profile: &InterestProfile, window: usize) -> Result<Vec<Segment>> {
    partition_scores(&profile.scores, window)
}

fn partition_scores(scores: &[f64], window: usize) -> Result<Vec<Segment>> {
    if window == 0 {
        return Err(PlanError::InvalidWindow);
    }
    let f = scores.len();
    if f == 0 {
        return Err(PlanError::EmptyVideo);
    }
    let mut bounds: Vec<(usize, usize)> = (0..f / window).map(|i| (i * window, (i + 1) * window - 1)).collect();
    let rem = f % window;
    if rem > 0 {
        match bounds.last_mut() {
            Some(last) if (rem as f64) < window as f64 / 2.0 => last.1 = f - 1,
            _ => bounds.push((f - rem, f - 1)),
        }
    }
    Ok(bounds
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| Segment {
            index,
            start,
            end,
            mean_score: mean(&scores[start..=end]),
            relevant: false,
            speedup: 1,
        })
        .collect())
}

/// How the semantic threshold is derived from the segment mean scores.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStrategy {
    #[default]
    Mean,
    /// Linear-interpolated percentile in `[0, 100]`.
    Percentile(f64),
    Otsu,
}

impl ThresholdStrategy {
    pub fn threshold(&self, values: &[f64]) -> f64 {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        match *self {
            ThresholdStrategy::Mean => mean(values),
            ThresholdStrategy::Percentile(p) => percentile(&sorted, p),
            ThresholdStrategy::Otsu => otsu(&sorted),
        }
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = (p.clamp(0.0, 100.0) / 100.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Split maximizing between-class variance; the threshold is the largest
/// value of the lower class.
fn otsu(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    let mut best = (f64::NEG_INFINITY, sorted[sorted.len() - 1]);
    let mut lower_sum = 0.0;
    for i in 1..sorted.len() {
        lower_sum += sorted[i - 1];
        if sorted[i - 1] == sorted[i] {
            continue;
        }
        let w0 = i as f64 / n;
        let w1 = 1.0 - w0;
        let m0 = lower_sum / i as f64;
        let m1 = (total - lower_sum) / (sorted.len() - i) as f64;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, sorted[i - 1]);
        }
    }
    best.1
}

/// Marks segments whose mean score is strictly above the threshold and
/// returns the threshold.
pub fn classify(segments: &mut [Segment], strategy: ThresholdStrategy) -> f64 {
    if segments.is_empty() {
        return 0.0;
    }
    let means: Vec<f64> = segments.iter().map(|s| s.mean_score).collect();
    let threshold = strategy.threshold(&means);
    for s in segments.iter_mut() {
        s.relevant = s.mean_score > threshold;
    }
    threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupSolution {
    pub relevant_rate: u32,
    pub nonrelevant_rate: u32,
    pub objective: f64,
}

/// Rate-allocation objective for one candidate pair. The length mismatch is
/// evaluated over a common integer denominator so exact solutions score 0.
pub fn speedup_objective(
    relevant_len: usize,
    nonrelevant_len: usize,
    target: u32,
    relevant_rate: u32,
    nonrelevant_rate: u32,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let (ls, lns) = (relevant_len as i128, nonrelevant_len as i128);
    let (s, ss, sns) = (target as i128, relevant_rate as i128, nonrelevant_rate as i128);
    let numerator = (ls + lns) * ss * sns - ls * s * sns - lns * s * ss;
    let mismatch = numerator.unsigned_abs() as f64 / (s * ss * sns) as f64;
    mismatch + lambda1 * (nonrelevant_rate as f64 - relevant_rate as f64).abs() + lambda2 * relevant_rate as f64
}

/// Exhaustive search over `1 <= S_s <= target <= S_ns <= s_max`. Among
/// candidates tied with the minimum, the smallest `S_s` wins, then the `S_ns`
/// closest to the target. Without relevant frames the relevant rate is
/// meaningless and is pinned to the target.
pub fn solve_speedups(
    relevant_len: usize,
    nonrelevant_len: usize,
    target: u32,
    lambda1: f64,
    lambda2: f64,
    s_max: u32,
) -> Result<SpeedupSolution> {
    if target == 0 {
        return Err(PlanError::InvalidTarget);
    }
    if relevant_len + nonrelevant_len == 0 {
        return Err(PlanError::EmptyVideo);
    }
    if s_max < target {
        return Err(PlanError::InfeasibleBounds { target, s_max });
    }
    let low = if relevant_len == 0 { target } else { 1 };
    let grid: Vec<SpeedupSolution> = (low..=target)
        .flat_map(|ss| (target..=s_max).map(move |sns| (ss, sns)))
        .map(|(ss, sns)| SpeedupSolution {
            relevant_rate: ss,
            nonrelevant_rate: sns,
            objective: speedup_objective(relevant_len, nonrelevant_len, target, ss, sns, lambda1, lambda2),
        })
        .collect();
    let min = grid.iter().map(|c| c.objective).fold(f64::INFINITY, f64::min);
    let slack = TIE_TOLERANCE * min.abs().max(1.0);
    // grid order is (S_s ascending, S_ns ascending), which is the tie-break order
    Ok(*grid.iter().find(|c| c.objective <= min + slack).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinementConfig {
    pub gamma: f64,
    pub max_levels: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig { gamma: DEFAULT_GAMMA, max_levels: DEFAULT_MAX_LEVELS }
    }
}

/// Everything the planner needs besides the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub window: usize,
    pub speedup: u32,
    pub strategy: ThresholdStrategy,
    pub lambda1: f64,
    pub lambda2: f64,
    pub s_max: u32,
    pub refinement: RefinementConfig,
}

/// One accepted refinement step.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementLevel {
    pub threshold: f64,
    /// Rate the refined frames had to average (the parent's relevant rate).
    pub target: u32,
    pub solution: SpeedupSolution,
    /// Original-frame ranges classified relevant at this level.
    pub relevant: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedPlan {
    pub segments: Vec<Segment>,
    pub threshold: f64,
    pub solution: SpeedupSolution,
    pub levels: Vec<RefinementLevel>,
}

/// Re-plans the frames of the relevant segments as if they were a video of
/// their own, with the relevant rate as the new target. Continues while the
/// new threshold grows by at least `1 + gamma`.
///
/// `segments` must tile the video and carry first-level classes and rates.
/// Returns the refined tiling and the accepted levels.
pub fn refine(
    segments: &[Segment],
    profile: &InterestProfile,
    relevant_rate: u32,
    threshold: f64,
    cfg: &PlannerConfig,
) -> Result<(Vec<Segment>, Vec<RefinementLevel>)> {
    let mut tiling: Vec<Segment> = segments.to_vec();
    let mut levels = Vec::new();
    let mut current: Vec<(usize, usize)> = segments.iter().filter(|s| s.relevant).map(|s| (s.start, s.end)).collect();
    let mut target = relevant_rate;
    let mut previous = threshold;

    for _ in 0..cfg.refinement.max_levels {
        if current.is_empty() {
            break;
        }
        let frames: Vec<usize> = current.iter().flat_map(|&(a, b)| a..=b).collect();
        let scores: Vec<f64> = frames.iter().map(|&f| profile.scores[f]).collect();
        let mut subs = partition_scores(&scores, cfg.window)?;
        let level_threshold = classify(&mut subs, cfg.strategy);
        if !(level_threshold >= (1.0 + cfg.refinement.gamma) * previous) || !subs.iter().any(|s| s.relevant) {
            debug!("refinement stops: threshold {level_threshold} after {previous}");
            break;
        }
        let relevant_len: usize = subs.iter().filter(|s| s.relevant).map(Segment::len).sum();
        let solution = solve_speedups(
            relevant_len,
            frames.len() - relevant_len,
            target,
            cfg.lambda1,
            cfg.lambda2,
            cfg.s_max,
        )?;

        // map virtual sub-segments back to original frames, splitting at gaps
        let mut pieces: Vec<(usize, usize, bool, u32)> = Vec::new();
        for sub in &subs {
            let rate = if sub.relevant { solution.relevant_rate } else { solution.nonrelevant_rate };
            let mut start = frames[sub.start];
            for v in sub.start + 1..=sub.end {
                if frames[v] != frames[v - 1] + 1 {
                    pieces.push((start, frames[v - 1], sub.relevant, rate));
                    start = frames[v];
                }
            }
            pieces.push((start, frames[sub.end], sub.relevant, rate));
        }

        let inside = |f: usize| current.iter().any(|&(a, b)| (a..=b).contains(&f));
        let mut next: Vec<Segment> = tiling.iter().filter(|s| !inside(s.start)).cloned().collect();
        for &(start, end, _, rate) in &pieces {
            // a piece inherits the first-level class of the frames it covers
            let relevant = tiling.iter().find(|s| s.frames().contains(&start)).is_some_and(|s| s.relevant);
            next.push(Segment {
                index: 0,
                start,
                end,
                mean_score: mean(&profile.scores[start..=end]),
                relevant,
                speedup: rate,
            });
        }
        next.sort_by_key(|s| s.start);
        for (i, s) in next.iter_mut().enumerate() {
            s.index = i;
        }
        tiling = next;

        current = pieces.iter().filter(|p| p.2).map(|p| (p.0, p.1)).collect();
        levels.push(RefinementLevel { threshold: level_threshold, target, solution, relevant: current.clone() });
        target = solution.relevant_rate;
        previous = level_threshold;
    }
    Ok((tiling, levels))
}

/// Partition, classify, allocate rates and refine.
pub fn plan_speedups(profile: &InterestProfile, cfg: &PlannerConfig) -> Result<SpeedPlan> {
    let mut segments = partition(profile, cfg.window)?;
    let threshold = classify(&mut segments, cfg.strategy);
    let relevant_len: usize = segments.iter().filter(|s| s.relevant).map(Segment::len).sum();
    let solution = solve_speedups(
        relevant_len,
        profile.len() - relevant_len,
        cfg.speedup,
        cfg.lambda1,
        cfg.lambda2,
        cfg.s_max,
    )?;
    for s in segments.iter_mut() {
        s.speedup = if s.relevant { solution.relevant_rate } else { solution.nonrelevant_rate };
    }
    let (segments, levels) = refine(&segments, profile, solution.relevant_rate, threshold, cfg)?;
    Ok(SpeedPlan { segments, threshold, solution, levels })
}

/// `t start end mean_score relevant speedup` per line.
pub fn write_segments<W: Write>(segments: &[Segment], mut out: W) -> std::io::Result<()> {
    for s in segments {
        writeln!(out, "{} {} {} {:.6} {} {}", s.index, s.start, s.end, s.mean_score, u8::from(s.relevant), s.speedup)?;
    }
    Ok(())
}

pub fn read_segments<R: BufRead>(reader: R, file: &str) -> Result<Vec<Segment>> {
    let bad = |line: usize, reason: &str| PlanError::Format { file: file.to_string(), line, reason: reason.to_string() };
    let mut segments: Vec<Segment> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(bad(i + 1, "expected `t start end mean_score relevant speedup`"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 1, "bad integer field"));
        let segment = Segment {
            index: int(fields[0])?,
            start: int(fields[1])?,
            end: int(fields[2])?,
            mean_score: fields[3].parse().map_err(|_| bad(i + 1, "bad mean score"))?,
            relevant: match fields[4] {
                "1" => true,
                "0" => false,
                _ => return Err(bad(i + 1, "relevant must be 0 or 1")),
            },
            speedup: fields[5].parse().map_err(|_| bad(i + 1, "bad speed-up"))?,
        };
        let expected_start = segments.last().map_or(0, |s| s.end + 1);
        if segment.start != expected_start || segment.end < segment.start || segment.speedup == 0 {
            return Err(bad(i + 1, "segments must tile the video with positive rates"));
        }
        segments.push(segment);
    }
    Ok(segments)
}

pub fn load_segments(path: impl AsRef<Path>) -> Result<Vec<Segment>> {
    let path = path.as_ref();
    read_segments(BufReader::new(File::open(path)?), &path.display().to_string())
}
