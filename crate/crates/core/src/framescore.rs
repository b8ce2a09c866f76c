//! Frame Bag-of-Topics and per-frame interestingness.
//!
//! Each region contributes the TF-IDF mass of its caption concepts to their
//! topics, weighted by viewer attention and captioner confidence. A frame's
//! interestingness for a user is the cosine similarity of the two topic
//! vectors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topicspace::{EmbeddingTable, TopicError, TopicLookup, TopicSpace};
use crate::userprofile::{BagOfTopics, ConceptExtractor};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("region does not intersect the saliency grid")]
    RegionOutOfBounds,
    #[error("frame {0}: region has neither precomputed attention nor a saliency grid")]
    MissingAttention(usize),
    #[error("user has {user} topics, frame has {frame}")]
    TopicCountMismatch { user: usize, frame: usize },
    #[error("{file}, line {line}: {reason}")]
    Annotation { file: String, line: usize, reason: String },
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<ScoreError>,
    },
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ScoreError>;

/// Pixel rectangle, serialized as `[x, y, width, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl From<[u32; 4]> for BoundingBox {
    fn from([x, y, width, height]: [u32; 4]) -> Self {
        BoundingBox { x, y, width, height }
    }
}

impl From<BoundingBox> for [u32; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.width, b.height]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub caption: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<f64>,
}

/// Row-major saliency probabilities. `scale` is the number of frame pixels
/// covered by one grid cell along each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyGrid {
    pub width: usize,
    pub height: usize,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    pub values: Vec<f64>,
}

fn unit_scale() -> f64 {
    1.0
}

impl SaliencyGrid {
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    #[serde(rename = "frame")]
    pub frame_index: usize,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saliency: Option<SaliencyGrid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoAnnotations {
    pub frames: Vec<FrameAnnotation>,
    pub fps: f64,
}

impl VideoAnnotations {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn validate_frame(frame: &FrameAnnotation) -> std::result::Result<(), String> {
    for (i, r) in frame.regions.iter().enumerate() {
        if !(r.confidence >= 0.0 && r.confidence.is_finite()) {
            return Err(format!("region {i}: confidence must be a finite non-negative number"));
        }
        if let Some(a) = r.attention {
            if !(0.0..=1.0).contains(&a) {
                return Err(format!("region {i}: attention outside [0, 1]"));
            }
        }
    }
    if let Some(g) = &frame.saliency {
        if g.values.len() != g.width * g.height {
            return Err("saliency value count differs from width * height".into());
        }
        if g.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err("saliency values must lie in [0, 1]".into());
        }
        if !(g.scale > 0.0 && g.scale.is_finite()) {
            return Err("saliency scale must be positive".into());
        }
    }
    Ok(())
}

/// Reads line-delimited JSON frame records. Records may appear in any order
/// but must cover frame indices `0..F` exactly once.
pub fn parse_annotations<R: BufRead>(reader: R, fps: f64, file: &str) -> Result<VideoAnnotations> {
    let bad = |line: usize, reason: String| ScoreError::Annotation { file: file.to_string(), line, reason };
    let mut frames: Vec<(usize, FrameAnnotation)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: FrameAnnotation = serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?;
        validate_frame(&frame).map_err(|e| bad(i + 1, e))?;
        frames.push((i + 1, frame));
    }
    frames.sort_by_key(|(_, f)| f.frame_index);
    for (expected, (line, f)) in frames.iter().enumerate() {
        if f.frame_index != expected {
            return Err(bad(*line, format!("frame indices must be contiguous from 0; expected {expected}")));
        }
    }
    Ok(VideoAnnotations { frames: frames.into_iter().map(|(_, f)| f).collect(), fps })
}

pub fn load_annotations(path: impl AsRef<Path>, fps: f64) -> Result<VideoAnnotations> {
    let path = path.as_ref();
    parse_annotations(BufReader::new(File::open(path)?), fps, &path.display().to_string())
}

pub fn write_annotations<W: Write>(video: &VideoAnnotations, mut out: W) -> std::io::Result<()> {
    for frame in &video.frames {
        serde_json::to_writer(&mut out, frame)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Mean saliency over the region's pixels, or the precomputed value when the
/// region carries one.
pub fn attention_weight(region: &Region, saliency: Option<&SaliencyGrid>) -> Result<f64> {
    if let Some(a) = region.attention {
        return Ok(a);
    }
    let grid = saliency.ok_or(ScoreError::RegionOutOfBounds)?;
    let b = region.bbox;
    let cell = |v: u32| v as f64 / grid.scale;
    let x0 = cell(b.x).floor() as usize;
    let y0 = cell(b.y).floor() as usize;
    let x1 = (cell(b.x + b.width).ceil() as usize).min(grid.width);
    let y1 = (cell(b.y + b.height).ceil() as usize).min(grid.height);
    if x0 >= x1 || y0 >= y1 {
        return Err(ScoreError::RegionOutOfBounds);
    }
    let mut sum = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            sum += grid.value(x, y);
        }
    }
    Ok(sum / ((x1 - x0) * (y1 - y0)) as f64)
}

/// How the inverse-document term of the TF-IDF weight is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfMode {
    /// `ln(total corpus tokens / in-document count)`.
    #[default]
    Literal,
    /// `ln(F / number of documents containing the concept)`.
    DocumentFrequency,
}

/// Concept documents of a whole video, kept per region, plus the counts
/// needed for TF-IDF.
#[derive(Debug, Clone)]
pub struct ConceptCorpus {
    regions: Vec<Vec<Vec<String>>>,
    counts: Vec<HashMap<String, usize>>,
    doc_freq: HashMap<String, usize>,
    total_tokens: usize,
    mode: IdfMode,
}

impl ConceptCorpus {
    /// `regions[f][r]` holds the concepts of region `r` in frame `f`.
    pub fn from_region_concepts(regions: Vec<Vec<Vec<String>>>, mode: IdfMode) -> Self {
        let mut counts = Vec::with_capacity(regions.len());
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut total_tokens = 0;
        for frame in &regions {
            let mut doc: HashMap<String, usize> = HashMap::new();
            for c in frame.iter().flatten() {
                *doc.entry(c.clone()).or_default() += 1;
                total_tokens += 1;
            }
            for c in doc.keys() {
                *doc_freq.entry(c.clone()).or_default() += 1;
            }
            counts.push(doc);
        }
        ConceptCorpus { regions, counts, doc_freq, total_tokens, mode }
    }

    /// One single-region frame per document.
    pub fn from_documents(docs: Vec<Vec<String>>, mode: IdfMode) -> Self {
        Self::from_region_concepts(docs.into_iter().map(|d| vec![d]).collect(), mode)
    }

    pub fn build(video: &VideoAnnotations, extractor: &ConceptExtractor, table: &EmbeddingTable, mode: IdfMode) -> Self {
        let regions = video
            .frames
            .par_iter()
            .map(|f| f.regions.iter().map(|r| extractor.extract_text(&r.caption, table)).collect())
            .collect();
        Self::from_region_concepts(regions, mode)
    }

    pub fn frame_count(&self) -> usize {
        self.regions.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    pub fn region_concepts(&self, f: usize, r: usize) -> &[String] {
        &self.regions[f][r]
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.regions.iter().flatten().flatten().map(String::as_str)
    }

    pub fn term_count(&self, concept: &str, f: usize) -> usize {
        self.counts[f].get(concept).copied().unwrap_or(0)
    }

    /// Log-normalized TF-IDF of `concept` in document `f`; 0 when absent.
    pub fn tf_idf(&self, concept: &str, f: usize) -> f64 {
        let tf = self.term_count(concept, f);
        if tf == 0 {
            return 0.0;
        }
        let tf = tf as f64;
        let idf = match self.mode {
            IdfMode::Literal => (self.total_tokens as f64 / tf).ln(),
            IdfMode::DocumentFrequency => (self.frame_count() as f64 / self.doc_freq[concept] as f64).ln(),
        };
        (1.0 + tf.ln()) * idf
    }
}

pub fn tf_idf(concept: &str, f: usize, corpus: &ConceptCorpus) -> f64 {
    corpus.tf_idf(concept, f)
}

/// TF-IDF mass of region `r` of frame `f` that falls into topic `k`.
pub fn uniqueness_weight(corpus: &ConceptCorpus, f: usize, r: usize, k: usize, lookup: &TopicLookup) -> f64 {
    corpus
        .region_concepts(f, r)
        .iter()
        .filter(|c| lookup.topic(c) == Some(k))
        .map(|c| corpus.tf_idf(c, f))
        .sum()
}

/// Frame BoT restricted to the listed regions.
pub fn partial_frame_bot(
    frame: &FrameAnnotation,
    regions: &[usize],
    corpus: &ConceptCorpus,
    lookup: &TopicLookup,
) -> Result<BagOfTopics> {
    let f = frame.frame_index;
    let mut bot = BagOfTopics::zeros(lookup.k());
    for &r in regions {
        let region = &frame.regions[r];
        if region.attention.is_none() && frame.saliency.is_none() {
            return Err(ScoreError::MissingAttention(f));
        }
        let weight = attention_weight(region, frame.saliency.as_ref())? * region.confidence;
        for c in corpus.region_concepts(f, r) {
            if let Some(k) = lookup.topic(c) {
                bot.add(k, weight * corpus.tf_idf(c, f));
            }
        }
    }
    Ok(bot)
}

/// `x_k = sum over regions of attention * confidence * uniqueness(r, k)`.
pub fn frame_bot(frame: &FrameAnnotation, corpus: &ConceptCorpus, lookup: &TopicLookup) -> Result<BagOfTopics> {
    let all: Vec<usize> = (0..frame.regions.len()).collect();
    partial_frame_bot(frame, &all, corpus, lookup)
}

/// Cosine similarity; 0 when either vector is zero.
pub fn interestingness(user: &BagOfTopics, frame: &BagOfTopics) -> Result<f64> {
    if user.k() != frame.k() {
        return Err(ScoreError::TopicCountMismatch { user: user.k(), frame: frame.k() });
    }
    let (nu, nf) = (user.norm(), frame.norm());
    if nu == 0.0 || nf == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = user.weights().iter().zip(frame.weights()).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nf)).clamp(0.0, 1.0))
}

/// Per-frame interestingness for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestProfile {
    pub scores: Vec<f64>,
}

impl InterestProfile {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `frame score` per line, six decimals.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (f, s) in self.scores.iter().enumerate() {
            writeln!(out, "{f} {s:.6}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, file: &str) -> Result<Self> {
        let bad = |line: usize, reason: &str| ScoreError::Annotation {
            file: file.to_string(),
            line,
            reason: reason.to_string(),
        };
        let mut scores = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(frame) = parts.next() else { continue };
            let frame: usize = frame.parse().map_err(|_| bad(i + 1, "bad frame index"))?;
            let score: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(i + 1, "bad score"))?;
            if frame != scores.len() {
                return Err(bad(i + 1, "frames must be listed in order from 0"));
            }
            if !(0.0..=1.0).contains(&score) {
                return Err(bad(i + 1, "score outside [0, 1]"));
            }
            scores.push(score);
        }
        Ok(InterestProfile { scores })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_from(BufReader::new(File::open(path)?), &path.display().to_string())
    }
}

/// Corpus statistics and topic assignments for one video, ready to score any
/// number of users.
#[derive(Debug, Clone)]
pub struct FrameScorer {
    corpus: ConceptCorpus,
    lookup: TopicLookup,
}

impl FrameScorer {
    pub fn new(
        video: &VideoAnnotations,
        extractor: &ConceptExtractor,
        table: &EmbeddingTable,
        space: &TopicSpace,
        mode: IdfMode,
    ) -> Result<Self> {
        let corpus = ConceptCorpus::build(video, extractor, table, mode);
        let lookup = TopicLookup::resolve(table, space, corpus.concepts())?;
        Ok(FrameScorer { corpus, lookup })
    }

    pub fn from_parts(corpus: ConceptCorpus, lookup: TopicLookup) -> Self {
        FrameScorer { corpus, lookup }
    }

    pub fn corpus(&self) -> &ConceptCorpus {
        &self.corpus
    }

    pub fn lookup(&self) -> &TopicLookup {
        &self.lookup
    }

    pub fn frame_bots(&self, video: &VideoAnnotations) -> Result<Vec<BagOfTopics>> {
        video
            .frames
            .par_iter()
            .map(|f| {
                frame_bot(f, &self.corpus, &self.lookup)
                    .map_err(|e| ScoreError::Frame { frame: f.frame_index, source: Box::new(e) })
            })
            .collect()
    }

    pub fn score(&self, user: &BagOfTopics, video: &VideoAnnotations) -> Result<InterestProfile> {
        let scores = video
            .frames
            .par_iter()
            .map(|f| {
                frame_bot(f, &self.corpus, &self.lookup)
                    .and_then(|bot| interestingness(user, &bot))
                    .map_err(|e| ScoreError::Frame { frame: f.frame_index, source: Box::new(e) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InterestProfile { scores })
    }
}

pub fn score_video(
    user: &BagOfTopics,
    video: &VideoAnnotations,
    extractor: &ConceptExtractor,
    space: &TopicSpace,
    table: &EmbeddingTable,
    mode: IdfMode,
) -> Result<InterestProfile> {
    FrameScorer::new(video, extractor, table, space, mode)?.score(user, video)
}
