//! Word-embedding table and the K-topic representation space built from it.
//!
//! The space is a set of k-means centroids over every embedding in the table.
//! A concept belongs to the topic whose centroid is nearest to its embedding
//! (Euclidean distance, ties to the lowest index).

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Topic count used when nothing else is configured (2^13).
pub const DEFAULT_TOPIC_COUNT: usize = 8192;

/// Hard cap on Lloyd iterations.
pub const DEFAULT_MAX_ITERATIONS: usize = 300;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("embedding file contains no vectors")]
    EmptyVocabulary,
    #[error("line {0}: vector dimension differs from the first entry")]
    DimensionMismatch(usize),
    #[error("line {0}: cannot parse embedding entry")]
    ParseError(usize),
    #[error("query vector has dimension {found}, expected {expected}")]
    QueryDimensionMismatch { expected: usize, found: usize },
    #[error("requested {k} clusters but only {n} embeddings are available")]
    TooManyClusters { k: usize, n: usize },
    #[error("topic count must be at least 1")]
    InvalidK,
    #[error("topic space file, line {line}: {reason}")]
    MalformedSpace { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TopicError>;

/// Pretrained word vectors, one per unique lowercase word.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    words: Vec<String>,
    vectors: Vec<f64>,
    dim: usize,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` pairs. Words are lowercased; the
    /// first occurrence of a duplicate wins.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut table = EmbeddingTable {
            words: Vec::new(),
            vectors: Vec::new(),
            dim: 0,
            index: HashMap::new(),
        };
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            table.push(i + 1, word, vector)?;
        }
        if table.words.is_empty() {
            return Err(TopicError::EmptyVocabulary);
        }
        Ok(table)
    }

    fn push(&mut self, line: usize, word: String, vector: Vec<f64>) -> Result<()> {
        let word = word.to_lowercase();
        if word.is_empty() || vector.is_empty() || vector.iter().any(|v| !v.is_finite()) {
            return Err(TopicError::ParseError(line));
        }
        if self.words.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(TopicError::DimensionMismatch(line));
        }
        if self.index.contains_key(&word) {
            warn!("line {line}: duplicate word {word:?} ignored");
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.vectors.extend_from_slice(&vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Looks up an already-normalized (lowercase) word.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vector(i))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Reads a whitespace-separated `word v1 .. vd` text file.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let file = File::open(path)?;
    parse_embeddings(BufReader::new(file))
}

/// Parses embedding entries from any buffered reader. Blank lines are skipped
/// but still counted for error line numbers.
pub fn parse_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable {
        words: Vec::new(),
        vectors: Vec::new(),
        dim: 0,
        index: HashMap::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let vector = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| TopicError::ParseError(line_no))?;
        table.push(line_no, word.to_string(), vector)?;
    }
    if table.words.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    Ok(table)
}

/// Returns the stored vector for `concept` after lowercasing, or `None` when
/// the concept is out of vocabulary.
pub fn embed_concept<'t>(concept: &str, table: &'t EmbeddingTable) -> Option<&'t [f64]> {
    table.get(&concept.to_lowercase())
}

/// K centroids in the embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicSpace {
    centroids: Vec<f64>,
    k: usize,
    dim: usize,
    seed: u64,
    inertia_trace: Vec<f64>,
}

impl TopicSpace {
    /// Wraps explicit centroids (used for fixtures and persisted spaces).
    pub fn from_centroids(centroids: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let k = centroids.len();
        if k == 0 {
            return Err(TopicError::InvalidK);
        }
        let dim = centroids[0].len();
        let mut flat = Vec::with_capacity(k * dim);
        for (i, c) in centroids.iter().enumerate() {
            if c.len() != dim {
                return Err(TopicError::QueryDimensionMismatch { expected: dim, found: c.len() });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(TopicError::MalformedSpace {
                    line: i + 2,
                    reason: "non-finite centroid component".into(),
                });
            }
            flat.extend_from_slice(c);
        }
        Ok(TopicSpace { centroids: flat, k, dim, seed, inertia_trace: Vec::new() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn centroid(&self, k: usize) -> &[f64] {
        &self.centroids[k * self.dim..(k + 1) * self.dim]
    }

    /// Final mean squared distance of the clustered points to their centroids.
    /// `None` for spaces that were not produced by clustering in this process.
    pub fn inertia(&self) -> Option<f64> {
        self.inertia_trace.last().copied()
    }

    /// Inertia after every assignment step, in iteration order.
    pub fn inertia_trace(&self) -> &[f64] {
        &self.inertia_trace
    }

    /// Index of the nearest centroid.
    pub fn assign(&self, w: &[f64]) -> Result<usize> {
        if w.len() != self.dim {
            return Err(TopicError::QueryDimensionMismatch { expected: self.dim, found: w.len() });
        }
        Ok(nearest(&self.centroids, self.dim, w).0)
    }

    /// Writes the `K d seed` header followed by one centroid per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.k, self.dim, self.seed)?;
        for k in 0..self.k {
            let line = self
                .centroid(k)
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let malformed = |line: usize, reason: &str| TopicError::MalformedSpace {
            line,
            reason: reason.to_string(),
        };
        let header = lines.next().ok_or_else(|| malformed(1, "missing header"))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(malformed(1, "header must be `K d seed`"));
        }
        let k: usize = fields[0].parse().map_err(|_| malformed(1, "bad K"))?;
        let dim: usize = fields[1].parse().map_err(|_| malformed(1, "bad d"))?;
        let seed: u64 = fields[2].parse().map_err(|_| malformed(1, "bad seed"))?;
        let mut centroids = Vec::with_capacity(k);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let c = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| malformed(line_no, "unparsable centroid component"))?;
            if c.len() != dim {
                return Err(malformed(line_no, "centroid dimension differs from header"));
            }
            centroids.push(c);
        }
        if centroids.len() != k {
            return Err(malformed(1, "centroid count differs from header"));
        }
        Self::from_centroids(centroids, seed)
    }
}

/// Nearest centroid index and squared distance; ties go to the lowest index.
fn nearest(centroids: &[f64], dim: usize, w: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(c, w);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `argmin_k ||q_k - w||`, lowest index on ties.
pub fn assign_topic(w: &[f64], space: &TopicSpace) -> Result<usize> {
    space.assign(w)
}

/// Clusters every embedding in `table` into `k` topics with the default
/// iteration cap.
pub fn build_topic_space(table: &EmbeddingTable, k: usize, seed: u64) -> Result<TopicSpace> {
    build_topic_space_with(table, k, seed, DEFAULT_MAX_ITERATIONS)
}

/// Seeded k-means++ initialization followed by Lloyd iterations until no
/// assignment changes or `max_iterations` is reached.
pub fn build_topic_space_with(
    table: &EmbeddingTable,
    k: usize,
    seed: u64,
    max_iterations: usize,
) -> Result<TopicSpace> {
    let n = table.len();
    let dim = table.dim();
    if k == 0 {
        return Err(TopicError::InvalidK);
    }
    if k > n {
        return Err(TopicError::TooManyClusters { k, n });
    }
    let points = &table.vectors;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(points, n, dim, k, &mut rng);

    let mut assignment = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 0..max_iterations.max(1) {
        let (next, dists) = assign_all(&centroids, points, dim);
        trace.push(dists.iter().sum::<f64>() / n as f64);
        let changed = next != assignment;
        assignment = next;
        if !changed {
            debug!("k-means converged after {} iterations", iteration + 1);
            converged = true;
            break;
        }
        update_centroids(&mut centroids, points, dim, k, &assignment, dists);
    }
    if !converged {
        let (_, dists) = assign_all(&centroids, points, dim);
        trace.push(dists.iter().sum::<f64>() / n as f64);
    }

    Ok(TopicSpace { centroids, k, dim, seed, inertia_trace: trace })
}

fn kmeans_plus_plus(points: &[f64], n: usize, dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut chosen = vec![false; n];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend_from_slice(&points[first * dim..(first + 1) * dim]);

    let mut d2: Vec<f64> = points
        .par_chunks_exact(dim)
        .map(|p| squared_distance(p, &centroids[..dim]))
        .collect();

    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just above the accumulated sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every remaining point coincides with a centroid
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        let c = points[pick * dim..(pick + 1) * dim].to_vec();
        d2.par_iter_mut()
            .zip(points.par_chunks_exact(dim))
            .for_each(|(d, p)| *d = d.min(squared_distance(p, &c)));
        centroids.extend_from_slice(&c);
    }
    centroids
}

fn assign_all(centroids: &[f64], points: &[f64], dim: usize) -> (Vec<usize>, Vec<f64>) {
    points
        .par_chunks_exact(dim)
        .map(|p| nearest(centroids, dim, p))
        .unzip()
}

fn update_centroids(
    centroids: &mut [f64],
    points: &[f64],
    dim: usize,
    k: usize,
    assignment: &[usize],
    mut dists: Vec<f64>,
) {
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        counts[a] += 1;
        for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(&points[i * dim..(i + 1) * dim]) {
            *s += v;
        }
    }
    for c in 0..k {
        let target = &mut centroids[c * dim..(c + 1) * dim];
        if counts[c] > 0 {
            let inv = counts[c] as f64;
            for (t, s) in target.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                *t = s / inv;
            }
            continue;
        }
        // empty cluster: move it onto the point farthest from its centroid
        let (far, &d) = dists
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if d > 0.0 {
            target.copy_from_slice(&points[far * dim..(far + 1) * dim]);
            dists[far] = 0.0;
        }
    }
}

/// Topic index for every distinct concept that has an embedding.
#[derive(Debug, Clone, Default)]
pub struct TopicLookup {
    topics: HashMap<String, usize>,
    k: usize,
}

impl TopicLookup {
    /// Resolves each distinct in-vocabulary concept once. Out-of-vocabulary
    /// concepts are left unresolved.
    pub fn resolve<'a, I>(table: &EmbeddingTable, space: &TopicSpace, concepts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if table.dim() != space.dim() {
            return Err(TopicError::QueryDimensionMismatch { expected: space.dim(), found: table.dim() });
        }
        let distinct: BTreeSet<&str> = concepts.into_iter().filter(|c| table.contains(c)).collect();
        let distinct: Vec<&str> = distinct.into_iter().collect();
        let topics = distinct
            .par_iter()
            .map(|c| (c.to_string(), nearest(&space.centroids, space.dim, table.get(c).unwrap()).0))
            .collect();
        Ok(TopicLookup { topics, k: space.k() })
    }

    pub fn topic(&self, concept: &str) -> Option<usize> {
        self.topics.get(concept).copied()
    }

    pub fn k(&self) -> usize {
        self.k
    }
}
