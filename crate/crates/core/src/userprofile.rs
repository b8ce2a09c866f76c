//! User interests from social-network posts.
//!
//! Posts are split into sentences, only positive sentences survive a
//! lexicon-sum sentiment filter, and the remaining nouns are counted per topic
//! into a [`BagOfTopics`].

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::debug;
use thiserror::Error;

use crate::topicspace::{EmbeddingTable, TopicError, TopicLookup, TopicSpace};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{file}, line {line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ProfileError>;

/// Raw posts of one user.
#[derive(Debug, Clone, Default)]
pub struct PostCorpus {
    pub source_id: String,
    pub posts: Vec<String>,
}

impl PostCorpus {
    pub fn new(source_id: impl Into<String>, posts: Vec<String>) -> Self {
        PostCorpus { source_id: source_id.into(), posts }
    }

    /// One post per line; the file stem becomes the source id.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let posts = BufReader::new(File::open(path)?).lines().collect::<std::io::Result<Vec<_>>>()?;
        let source_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(PostCorpus { source_id, posts })
    }
}

/// Signed integer valence per lowercase token.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    scores: HashMap<String, i32>,
}

impl SentimentLexicon {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, i32)>,
        S: AsRef<str>,
    {
        let scores = pairs.into_iter().map(|(t, v)| (t.as_ref().to_lowercase(), v)).collect();
        SentimentLexicon { scores }
    }

    /// `token integer` per line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = path.display().to_string();
        let mut scores = HashMap::new();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let value = parts
                .next()
                .and_then(|v| v.parse::<i32>().ok())
                .filter(|_| parts.next().is_none())
                .ok_or_else(|| ProfileError::Format {
                    file: file.clone(),
                    line: i + 1,
                    reason: "expected `token integer`".into(),
                })?;
            scores.entry(token.to_lowercase()).or_insert(value);
        }
        Ok(SentimentLexicon { scores })
    }

    pub fn valence(&self, token: &str) -> i32 {
        self.scores.get(token).copied().unwrap_or(0)
    }

    /// Sum of token valences.
    pub fn score(&self, sentence: &str) -> i32 {
        tokens(sentence).map(|t| self.valence(&t)).sum()
    }
}

/// One token per line, lowercased.
pub fn load_word_set(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let word = line.trim();
        if !word.is_empty() {
            set.insert(word.to_lowercase());
        }
    }
    Ok(set)
}

fn is_url(token: &str) -> bool {
    let t = token.to_ascii_lowercase();
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

/// Lowercase word tokens of `text`. URLs and @mentions are dropped, hashtags
/// keep their word, and any other non-alphanumeric character separates tokens.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .filter(|raw| !is_url(raw) && !raw.starts_with('@'))
        .flat_map(|raw| {
            raw.split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .filter(|t| !t.is_empty())
                .map(str::to_lowercase)
        })
}

/// Splits text into sentences at newlines and at whitespace-delimited words
/// ending in `.`, `!` or `?`. URLs never end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    for line in text.lines() {
        let mut current: Vec<&str> = Vec::new();
        for word in line.split_whitespace() {
            current.push(word);
            if !is_url(word) && word.ends_with(['.', '!', '?']) {
                sentences.push(current.join(" "));
                current.clear();
            }
        }
        if !current.is_empty() {
            sentences.push(current.join(" "));
        }
    }
    sentences
}

/// Sentences with strictly positive summed valence, in original order.
pub fn filter_positive(posts: &PostCorpus, lexicon: &SentimentLexicon) -> Vec<String> {
    posts
        .posts
        .iter()
        .flat_map(|p| split_sentences(p))
        .filter(|s| lexicon.score(s) > 0)
        .collect()
}

/// Ordered concept tokens; duplicates are kept because counts matter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptDocument {
    pub concepts: Vec<String>,
}

impl ConceptDocument {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

/// Token filter shared by user posts and region captions so both sides land
/// in the same vocabulary.
#[derive(Debug, Clone, Default)]
pub struct ConceptExtractor {
    pub stopwords: HashSet<String>,
    pub nouns: Option<HashSet<String>>,
}

impl ConceptExtractor {
    pub fn new(stopwords: HashSet<String>, nouns: Option<HashSet<String>>) -> Self {
        ConceptExtractor { stopwords, nouns }
    }

    pub fn keeps(&self, token: &str, table: &EmbeddingTable) -> bool {
        !self.stopwords.contains(token)
            && table.contains(token)
            && self.nouns.as_ref().is_none_or(|n| n.contains(token))
    }

    pub fn extract_text(&self, text: &str, table: &EmbeddingTable) -> Vec<String> {
        tokens(text).filter(|t| self.keeps(t, table)).collect()
    }

    pub fn extract<S: AsRef<str>>(&self, sentences: &[S], table: &EmbeddingTable) -> ConceptDocument {
        let concepts = sentences.iter().flat_map(|s| self.extract_text(s.as_ref(), table)).collect();
        ConceptDocument { concepts }
    }
}

pub fn extract_concepts<S: AsRef<str>>(
    sentences: &[S],
    table: &EmbeddingTable,
    noun_list: Option<&HashSet<String>>,
    stopwords: &HashSet<String>,
) -> ConceptDocument {
    ConceptExtractor::new(stopwords.clone(), noun_list.cloned()).extract(sentences, table)
}

/// Non-negative K-dimensional topic vector shared by users and frames.
#[derive(Debug, Clone, PartialEq)]
pub struct BagOfTopics {
    weights: Vec<f64>,
}

impl BagOfTopics {
    pub fn zeros(k: usize) -> Self {
        BagOfTopics { weights: vec![0.0; k] }
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= 0.0 && w.is_finite()));
        BagOfTopics { weights }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn add(&mut self, k: usize, value: f64) {
        self.weights[k] += value;
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| *w == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BagOfTopics { weights: self.weights.iter().map(|w| w * factor).collect() }
    }

    /// Header line `K`, then one `topic weight` line per non-zero component.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.k())?;
        for (k, w) in self.weights.iter().enumerate().filter(|(_, w)| **w != 0.0) {
            writeln!(out, "{k} {w}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, file: &str) -> Result<Self> {
        let bad = |line: usize, reason: &str| ProfileError::Format {
            file: file.to_string(),
            line,
            reason: reason.to_string(),
        };
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing topic count"))??;
        let k: usize = header.trim().parse().map_err(|_| bad(1, "bad topic count"))?;
        let mut bot = BagOfTopics::zeros(k);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(idx) = parts.next() else { continue };
            let idx: usize = idx.parse().map_err(|_| bad(i + 2, "bad topic index"))?;
            let w: f64 = parts
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| bad(i + 2, "bad weight"))?;
            if idx >= k || !(w >= 0.0 && w.is_finite()) {
                return Err(bad(i + 2, "topic index or weight out of range"));
            }
            bot.weights[idx] = w;
        }
        Ok(bot)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_from(BufReader::new(File::open(path)?), &path.display().to_string())
    }
}

/// `x_k` = number of concepts whose embedding falls in topic `k`.
pub fn user_bot_with_lookup(doc: &ConceptDocument, lookup: &TopicLookup) -> BagOfTopics {
    let mut bot = BagOfTopics::zeros(lookup.k());
    let mut oov = 0usize;
    for c in &doc.concepts {
        match lookup.topic(c) {
            Some(k) => bot.add(k, 1.0),
            None => oov += 1,
        }
    }
    if oov > 0 {
        debug!("{oov} out-of-vocabulary concepts skipped");
    }
    bot
}

pub fn build_user_bot(doc: &ConceptDocument, space: &TopicSpace, table: &EmbeddingTable) -> Result<BagOfTopics> {
    let lookup = TopicLookup::resolve(table, space, doc.concepts.iter().map(String::as_str))?;
    Ok(user_bot_with_lookup(doc, &lookup))
}
