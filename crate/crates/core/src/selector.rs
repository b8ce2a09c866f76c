//! Frame selection inside each segment.
//!
//! Every segment becomes a DAG over its frames with edges up to `tau` frames
//! apart. Edge weights combine relevance, instability, motion and appearance
//! costs and are multiplied by `ceil(skip / rate)` so skips longer than the
//! segment's rate are discouraged. The shortest source-to-sink path gives the
//! kept frames.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::framescore::InterestProfile;
use crate::planner::Segment;

pub const DEFAULT_TAU: usize = 100;
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("frame {frame} is outside a video of {len} frames")]
    FrameOutOfRange { frame: usize, len: usize },
    #[error("frames {g} and {h} have histograms of different shapes")]
    HistogramMismatch { g: usize, h: usize },
    #[error("segment selections overlap at frame {0}")]
    PlanOverlap(usize),
    #[error("profile has {profile} frames but features describe {features}")]
    LengthMismatch { profile: usize, features: usize },
    #[error("{file}, line {line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SelectError>;

/// Precomputed motion and appearance descriptors of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionFeatures {
    foe_dist: Vec<f64>,
    flow_mag: Vec<f64>,
    histograms: Vec<Vec<Vec<f64>>>,
    center_disp: Vec<Option<f64>>,
    half_diag: f64,
    flow_prefix: Vec<f64>,
    cdfs: Vec<Vec<Vec<f64>>>,
}

impl TransitionFeatures {
    /// `flow_mag` and `center_disp` describe the pairs `(f, f + 1)` and hold
    /// one entry fewer than there are frames.
    pub fn new(
        foe_dist: Vec<f64>,
        flow_mag: Vec<f64>,
        histograms: Vec<Vec<Vec<f64>>>,
        center_disp: Vec<Option<f64>>,
        half_diag: f64,
    ) -> Self {
        let frames = foe_dist.len();
        assert!(histograms.len() == frames, "one histogram set per frame");
        assert!(flow_mag.len() + 1 == frames.max(1) && center_disp.len() == flow_mag.len());
        let mut flow_prefix = Vec::with_capacity(frames);
        flow_prefix.push(0.0);
        for m in &flow_mag {
            flow_prefix.push(flow_prefix.last().unwrap() + m);
        }
        let cdfs = histograms.iter().map(|channels| channels.iter().map(|h| cdf(h)).collect()).collect();
        TransitionFeatures { foe_dist, flow_mag, histograms, center_disp, half_diag, flow_prefix, cdfs }
    }

    pub fn len(&self) -> usize {
        self.foe_dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.foe_dist.is_empty()
    }

    pub fn half_diag(&self) -> f64 {
        self.half_diag
    }

    pub fn foe_dist(&self) -> &[f64] {
        &self.foe_dist
    }

    pub fn flow_mag(&self) -> &[f64] {
        &self.flow_mag
    }

    pub fn center_disp(&self) -> &[Option<f64>] {
        &self.center_disp
    }

    pub fn histograms(&self, f: usize) -> &[Vec<f64>] {
        &self.histograms[f]
    }

    fn check(&self, f: usize) -> Result<()> {
        if f < self.len() {
            Ok(())
        } else {
            Err(SelectError::FrameOutOfRange { frame: f, len: self.len() })
        }
    }

    /// Accumulated consecutive flow magnitude over `[g, h)`.
    pub fn pair_motion(&self, g: usize, h: usize) -> f64 {
        self.flow_prefix[h] - self.flow_prefix[g]
    }

    /// Mean pair motion over every frame pair `rate` apart.
    pub fn motion_baseline(&self, rate: u32) -> f64 {
        let rate = rate as usize;
        let n = self.len();
        if rate == 0 || n == 0 {
            return 0.0;
        }
        if n <= rate {
            // no pair that far apart; extrapolate from the mean step
            let steps = n.saturating_sub(1).max(1) as f64;
            return self.pair_motion(0, n - 1) / steps * rate as f64;
        }
        let total: f64 = (0..n - rate).map(|f| self.pair_motion(f, f + rate)).sum();
        total / (n - rate) as f64
    }
}

fn cdf(hist: &[f64]) -> Vec<f64> {
    let mass: f64 = hist.iter().sum();
    let scale = if mass > 0.0 { 1.0 / mass } else { 0.0 };
    let mut acc = 0.0;
    hist.iter()
        .map(|v| {
            acc += v * scale;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeatureRecord {
    frame: usize,
    foe_dist: f64,
    #[serde(default)]
    flow_mag_next: Option<f64>,
    hist: Vec<Vec<f64>>,
    #[serde(default)]
    center_disp_next: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_diag: Option<f64>,
}

/// Reads one JSON record per frame. The half diagonal comes from the first
/// record that carries one, else from `default_half_diag`.
pub fn parse_features<R: BufRead>(reader: R, default_half_diag: Option<f64>, file: &str) -> Result<TransitionFeatures> {
    let bad = |line: usize, reason: String| SelectError::Format { file: file.to_string(), line, reason };
    let mut records: Vec<(usize, FeatureRecord)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FeatureRecord = serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?;
        records.push((i + 1, rec));
    }
    records.sort_by_key(|(_, r)| r.frame);
    let n = records.len();
    let shape: Vec<usize> = records.first().map(|(_, r)| r.hist.iter().map(Vec::len).collect()).unwrap_or_default();
    let mut half_diag = None;
    for (expected, (line, r)) in records.iter().enumerate() {
        let line = *line;
        if r.frame != expected {
            return Err(bad(line, format!("frame indices must be contiguous from 0; expected {expected}")));
        }
        if !(r.foe_dist >= 0.0 && r.foe_dist.is_finite()) {
            return Err(bad(line, "foe_dist must be finite and non-negative".into()));
        }
        let last = expected + 1 == n;
        match r.flow_mag_next {
            Some(m) if !(m >= 0.0 && m.is_finite()) => return Err(bad(line, "flow_mag_next must be non-negative".into())),
            None if !last => return Err(bad(line, "flow_mag_next missing".into())),
            _ => {}
        }
        if let Some(d) = r.center_disp_next {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(bad(line, "center_disp_next must be non-negative or null".into()));
            }
        }
        if r.hist.iter().map(Vec::len).collect::<Vec<_>>() != shape {
            return Err(bad(line, "histogram shape differs from frame 0".into()));
        }
        if r.hist.iter().flatten().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(bad(line, "histogram counts must be non-negative".into()));
        }
        if half_diag.is_none() {
            half_diag = r.half_diag;
        }
    }
    let half_diag = half_diag
        .or(default_half_diag)
        .filter(|d| *d > 0.0)
        .ok_or_else(|| bad(1, "no positive half_diag in records or configuration".into()))?;
    let pairs = n.saturating_sub(1);
    let flow = records.iter().take(pairs).map(|(_, r)| r.flow_mag_next.unwrap()).collect();
    let disp = records.iter().take(pairs).map(|(_, r)| r.center_disp_next).collect();
    let foe = records.iter().map(|(_, r)| r.foe_dist).collect();
    let hist = records.into_iter().map(|(_, r)| r.hist).collect();
    Ok(TransitionFeatures::new(foe, flow, hist, disp, half_diag))
}

pub fn load_features(path: impl AsRef<Path>, default_half_diag: Option<f64>) -> Result<TransitionFeatures> {
    let path = path.as_ref();
    parse_features(BufReader::new(File::open(path)?), default_half_diag, &path.display().to_string())
}

pub fn write_features<W: Write>(features: &TransitionFeatures, mut out: W) -> std::io::Result<()> {
    for f in 0..features.len() {
        let rec = FeatureRecord {
            frame: f,
            foe_dist: features.foe_dist[f],
            flow_mag_next: features.flow_mag.get(f).copied(),
            hist: features.histograms[f].clone(),
            center_disp_next: features.center_disp.get(f).copied().flatten(),
            half_diag: (f == 0).then_some(features.half_diag),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Weights of the four transition costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub lambda_s: f64,
    pub lambda_i: f64,
    pub lambda_m: f64,
    pub lambda_a: f64,
    pub epsilon: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { lambda_s: 1.0, lambda_i: 1.0, lambda_m: 0.05, lambda_a: 1.0, epsilon: DEFAULT_EPSILON }
    }
}

/// Relevance drop: `1 / (I_g + I_h + eps)`.
pub fn relevance_cost(score_g: f64, score_h: f64, epsilon: f64) -> f64 {
    1.0 / (score_g + score_h + epsilon)
}

/// Mean focus-of-expansion distance of the two frames.
pub fn instability_cost(features: &TransitionFeatures, g: usize, h: usize) -> Result<f64> {
    features.check(g)?;
    features.check(h)?;
    Ok((features.foe_dist[g] + features.foe_dist[h]) / 2.0)
}

/// Deviation of the pair's accumulated motion from the video-wide motion of
/// pairs `rate` frames apart.
pub fn motion_cost(features: &TransitionFeatures, g: usize, h: usize, rate: u32) -> Result<f64> {
    features.check(g)?;
    features.check(h)?;
    let (g, h) = (g.min(h), g.max(h));
    Ok((features.pair_motion(g, h) - features.motion_baseline(rate)).abs())
}

/// Per-channel 1-D earth mover's distance of the normalized histograms,
/// averaged over channels.
pub fn appearance_cost(features: &TransitionFeatures, g: usize, h: usize) -> Result<f64> {
    features.check(g)?;
    features.check(h)?;
    let (a, b) = (&features.cdfs[g], &features.cdfs[h]);
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
        return Err(SelectError::HistogramMismatch { g, h });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>())
        .sum();
    Ok(total / a.len() as f64)
}

/// Weighted sum of the four costs for the transition `g -> h`.
pub fn transition_cost(
    g: usize,
    h: usize,
    profile: &InterestProfile,
    features: &TransitionFeatures,
    rate: u32,
    weights: &CostWeights,
) -> Result<f64> {
    let baseline = features.motion_baseline(rate);
    CostModel::new(profile, features, weights).edge(g, h, baseline)
}

/// Cost evaluation with the per-rate motion baselines cached.
pub struct CostModel<'a> {
    profile: &'a InterestProfile,
    features: &'a TransitionFeatures,
    weights: &'a CostWeights,
}

impl<'a> CostModel<'a> {
    pub fn new(profile: &'a InterestProfile, features: &'a TransitionFeatures, weights: &'a CostWeights) -> Self {
        CostModel { profile, features, weights }
    }

    fn edge(&self, g: usize, h: usize, baseline: f64) -> Result<f64> {
        let w = self.weights;
        if g >= self.profile.len() || h >= self.profile.len() {
            return Err(SelectError::FrameOutOfRange { frame: g.max(h), len: self.profile.len() });
        }
        let mut cost = w.lambda_s * relevance_cost(self.profile.scores[g], self.profile.scores[h], w.epsilon);
        if w.lambda_i != 0.0 {
            cost += w.lambda_i * instability_cost(self.features, g, h)?;
        }
        if w.lambda_m != 0.0 {
            cost += w.lambda_m * (self.features.pair_motion(g, h) - baseline).abs();
        }
        if w.lambda_a != 0.0 {
            cost += w.lambda_a * appearance_cost(self.features, g, h)?;
        }
        Ok(cost)
    }

    /// Selects frames of one segment.
    pub fn select(&self, segment: &Segment, tau: usize) -> Result<Vec<usize>> {
        self.select_span(segment.start, segment.end, segment.speedup, tau)
    }

    /// Shortest path from `start` to `end` (both kept) at `rate`.
    pub fn select_span(&self, start: usize, end: usize, rate: u32, tau: usize) -> Result<Vec<usize>> {
        let baseline = self.features.motion_baseline(rate);
        let mut failure = None;
        let (path, _) = shortest_path(end + 1 - start, tau, rate, |i, j| {
            self.edge(start + i, start + j, baseline).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::INFINITY
            })
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(path.into_iter().map(|i| start + i).collect()),
        }
    }
}

/// Shortest path from node 0 to node `len - 1` over edges `i -> j` with
/// `0 < j - i <= tau`, weighted by `ceil((j - i) / rate) * cost(i, j)`.
/// Among equal-cost paths the lexicographically smallest node sequence is
/// returned. Segments of one or two nodes return every node.
pub fn shortest_path<F>(len: usize, tau: usize, rate: u32, mut cost: F) -> (Vec<usize>, f64)
where
    F: FnMut(usize, usize) -> f64,
{
    match len {
        0 => return (Vec::new(), 0.0),
        1 => return (vec![0], 0.0),
        2 => return (vec![0, 1], cost(0, 1)),
        _ => {}
    }
    let tau = tau.max(1);
    let rate = rate.max(1) as usize;
    let sink = len - 1;
    // best[i]: cheapest cost from i to the sink; next[i]: smallest successor achieving it
    let mut best = vec![f64::INFINITY; len];
    let mut next = vec![usize::MAX; len];
    best[sink] = 0.0;
    for i in (0..sink).rev() {
        for j in i + 1..=(i + tau).min(sink) {
            let skip = j - i;
            let w = skip.div_ceil(rate) as f64 * cost(i, j) + best[j];
            if w < best[i] {
                best[i] = w;
                next[i] = j;
            }
        }
    }
    let mut path = vec![0];
    let mut node = 0;
    while node != sink {
        node = next[node];
        path.push(node);
    }
    (path, best[0])
}

pub fn select_frames(
    segment: &Segment,
    profile: &InterestProfile,
    features: &TransitionFeatures,
    weights: &CostWeights,
    tau: usize,
) -> Result<Vec<usize>> {
    CostModel::new(profile, features, weights).select(segment, tau)
}

/// Kept frames of a whole video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub total_frames: usize,
    pub per_segment: Vec<Vec<usize>>,
    pub selected: Vec<usize>,
    pub achieved_rate: f64,
}

impl SelectionPlan {
    pub fn write_json<W: Write>(&self, out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// One frame index per line.
    pub fn write_indices<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for f in &self.selected {
            writeln!(out, "{f}")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let plan: SelectionPlan = serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(|e| {
            SelectError::Format { file: path.display().to_string(), line: e.line(), reason: e.to_string() }
        })?;
        compose(plan.per_segment, plan.total_frames)
    }
}

/// Concatenates per-segment selections in segment order.
pub fn compose(per_segment: Vec<Vec<usize>>, total_frames: usize) -> Result<SelectionPlan> {
    let mut selected: Vec<usize> = Vec::with_capacity(per_segment.iter().map(Vec::len).sum());
    for &f in per_segment.iter().flatten() {
        if f >= total_frames {
            return Err(SelectError::FrameOutOfRange { frame: f, len: total_frames });
        }
        if selected.last().is_some_and(|&last| f <= last) {
            return Err(SelectError::PlanOverlap(f));
        }
        selected.push(f);
    }
    let achieved_rate = if selected.is_empty() { f64::INFINITY } else { total_frames as f64 / selected.len() as f64 };
    Ok(SelectionPlan { total_frames, per_segment, selected, achieved_rate })
}

/// How neighbouring segments meet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeamMode {
    /// Every segment keeps its own first and last frame.
    Both,
    /// A segment's path ends on the next segment's first frame, which that
    /// segment keeps; only the final segment keeps its last frame. Avoids a
    /// one-frame step and an extra kept frame at every seam.
    #[default]
    Shared,
}

/// Runs frame selection on every segment in parallel and composes the plan.
/// `segments` must tile the video in order.
pub fn select_plan(
    segments: &[Segment],
    profile: &InterestProfile,
    features: &TransitionFeatures,
    weights: &CostWeights,
    tau: usize,
    seams: SeamMode,
) -> Result<SelectionPlan> {
    if profile.len() != features.len() {
        return Err(SelectError::LengthMismatch { profile: profile.len(), features: features.len() });
    }
    let model = CostModel::new(profile, features, weights);
    let per_segment = segments
        .par_iter()
        .enumerate()
        .map(|(i, s)| match (seams, segments.get(i + 1)) {
            (SeamMode::Shared, Some(next)) => {
                let mut path = model.select_span(s.start, next.start, s.speedup, tau)?;
                path.pop();
                Ok(path)
            }
            _ => model.select(s, tau),
        })
        .collect::<Result<Vec<_>>>()?;
    compose(per_segment, profile.len())
}
