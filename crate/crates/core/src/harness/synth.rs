//! Deterministic synthetic corpus: a small embedding vocabulary with
//! well-separated word groups, annotated videos with planted concepts,
//! transition features, user posts and frame-level ground truth.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::framescore::{write_annotations, BoundingBox, FrameAnnotation, Region, VideoAnnotations};
use crate::metrics::GroundTruth;
use crate::selector::{write_features, TransitionFeatures};
use crate::topicspace::{EmbeddingTable, TopicError};
use crate::userprofile::{ConceptExtractor, PostCorpus, SentimentLexicon};

/// The five concepts users can care about.
pub const CONCEPTS: [&str; 5] = ["car", "chair", "computer", "people", "tree"];

const GROUPS: [(&str, [&str; 6]); 9] = [
    ("car", ["car", "truck", "bus", "van", "bicycle", "motorcycle"]),
    ("chair", ["chair", "table", "sofa", "bench", "desk", "bed"]),
    ("computer", ["computer", "laptop", "phone", "keyboard", "monitor", "screen"]),
    ("people", ["people", "man", "woman", "person", "child", "crowd"]),
    ("tree", ["tree", "grass", "flower", "bush", "plant", "leaf"]),
    ("building", ["building", "wall", "window", "door", "roof", "floor"]),
    ("sky", ["sky", "cloud", "light", "sun", "shadow", "lamp"]),
    ("road", ["road", "street", "sidewalk", "sign", "pole", "line"]),
    ("misc", ["day", "time", "thing", "way", "week", "morning"]),
];

/// Background groups used for noise regions.
const BACKGROUND: [&str; 3] = ["building", "sky", "road"];

const ADJECTIVES: [&str; 10] = ["red", "white", "black", "small", "large", "old", "new", "blue", "tall", "wooden"];

const LEXICON: [(&str, i32); 12] = [
    ("love", 3),
    ("great", 3),
    ("awesome", 4),
    ("happy", 3),
    ("like", 2),
    ("beautiful", 3),
    ("hate", -3),
    ("awful", -3),
    ("bad", -3),
    ("boring", -2),
    ("terrible", -3),
    ("broken", -1),
];

const STOPWORDS: [&str; 22] = [
    "a", "an", "the", "my", "is", "was", "with", "on", "near", "and", "this", "i", "it", "of", "in", "at", "to",
    "so", "what", "our", "its", "by",
];

const EMBEDDING_DIM: usize = 16;

fn group_words(concept: &str) -> &'static [&'static str; 6] {
    &GROUPS.iter().find(|(name, _)| *name == concept).unwrap_or_else(|| panic!("unknown group {concept}")).1
}

/// Vocabulary, lexicon and word lists shared by all synthetic videos.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub embeddings: Vec<(String, Vec<f64>)>,
    pub lexicon: Vec<(String, i32)>,
    pub stopwords: Vec<String>,
    pub nouns: Vec<String>,
    pub seed: u64,
}

impl SyntheticWorld {
    /// Group centers are drawn far apart; words scatter tightly around them.
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = Normal::new(0.0, 10.0).expect("valid sigma");
        let spread = Normal::new(0.0, 0.5).expect("valid sigma");
        let mut embeddings = Vec::new();
        for (_, words) in GROUPS {
            let c: Vec<f64> = (0..EMBEDDING_DIM).map(|_| center.sample(&mut rng)).collect();
            for w in words {
                embeddings.push((w.to_string(), c.iter().map(|x| x + spread.sample(&mut rng)).collect()));
            }
        }
        // sentiment words live in the vocabulary too, scattered widely
        for (w, _) in LEXICON {
            embeddings.push((w.to_string(), (0..EMBEDDING_DIM).map(|_| center.sample(&mut rng)).collect()));
        }
        let nouns = GROUPS.iter().take(8).flat_map(|(_, ws)| ws.iter().map(|w| w.to_string())).collect();
        SyntheticWorld {
            embeddings,
            lexicon: LEXICON.iter().map(|(w, v)| (w.to_string(), *v)).collect(),
            stopwords: STOPWORDS.iter().map(|w| w.to_string()).collect(),
            nouns,
            seed,
        }
    }

    /// One topic per word group.
    pub fn topic_count(&self) -> usize {
        GROUPS.len()
    }

    pub fn table(&self) -> Result<EmbeddingTable, TopicError> {
        EmbeddingTable::from_entries(self.embeddings.iter().cloned())
    }

    pub fn sentiment(&self) -> SentimentLexicon {
        SentimentLexicon::from_pairs(self.lexicon.iter().map(|(w, v)| (w.as_str(), *v)))
    }

    pub fn extractor(&self) -> ConceptExtractor {
        ConceptExtractor::new(
            self.stopwords.iter().cloned().collect::<HashSet<_>>(),
            Some(self.nouns.iter().cloned().collect()),
        )
    }

    /// Posts of a user who likes `concept`: positive posts about its group,
    /// negative posts about other concepts and neutral chatter.
    pub fn posts(&self, concept: &str, count: usize, seed: u64) -> PostCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let liked = group_words(concept);
        let others: Vec<&str> = CONCEPTS.iter().copied().filter(|c| *c != concept).collect();
        let mut posts = Vec::with_capacity(count);
        for _ in 0..count {
            let w = if rng.random_bool(0.6) { concept } else { *liked.choose(&mut rng).unwrap() };
            let bg = *group_words(BACKGROUND.choose(&mut rng).unwrap()).choose(&mut rng).unwrap();
            let other = *group_words(others.choose(&mut rng).unwrap()).choose(&mut rng).unwrap();
            let adj = *ADJECTIVES.choose(&mut rng).unwrap();
            let post = match rng.random_range(0..10) {
                0 => format!("I love my {adj} {w}!"),
                1 => format!("What a great {w} today. So happy."),
                2 => format!("@friend look at this awesome {w} https://example.com/p/{}", rng.random_range(0..1000)),
                3 => format!("Beautiful {w} near the {bg} #{w}"),
                4 => format!("I like the {w}. The {other} was boring though!"),
                5 => format!("I hate the {other}."),
                6 => format!("This {other} is awful, {adj} and broken"),
                7 => format!("Went past the {bg} this morning"),
                8 => format!("Another {bg} and another {other}"),
                _ => format!("Great {w} and great {bg}!"),
            };
            posts.push(post);
        }
        PostCorpus::new(concept, posts)
    }

    /// Writes `embeddings.txt`, `lexicon.txt`, `stopwords.txt` and `nouns.txt`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join("embeddings.txt"))?);
        for (w, v) in &self.embeddings {
            write!(out, "{w}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        let lexicon: String = self.lexicon.iter().map(|(w, v)| format!("{w} {v}\n")).collect();
        fs::write(dir.join("lexicon.txt"), lexicon)?;
        fs::write(dir.join("stopwords.txt"), self.stopwords.join("\n") + "\n")?;
        fs::write(dir.join("nouns.txt"), self.nouns.join("\n") + "\n")?;
        Ok(())
    }
}

/// Frames `start..=end` where `concept` is visible with probability `density`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSegment {
    pub start: usize,
    pub end: usize,
    pub concept: String,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub frames: usize,
    pub fps: f64,
    pub planted: Vec<PlantedSegment>,
    /// Mean number of background regions per frame.
    pub background_regions: f64,
    /// Chance that a frame shows a stray concept region.
    pub stray_rate: f64,
    pub motion_noise: f64,
    /// Chance that the homography between two consecutive frames fails.
    pub failure_rate: f64,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Plants every concept over `fraction` of the video, split into
    /// `ranges` non-overlapping ranges per concept. Different concepts may
    /// overlap.
    pub fn with_layout(frames: usize, concepts: &[&str], fraction: f64, ranges: usize, density: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut planted = Vec::new();
        let ranges = ranges.max(1);
        for concept in concepts {
            let total = ((frames as f64 * fraction).round() as usize).min(frames);
            let each = (total / ranges).max(1);
            let mut taken: Vec<(usize, usize)> = Vec::new();
            for _ in 0..ranges {
                for _attempt in 0..1000 {
                    let start = rng.random_range(0..=frames - each);
                    let end = start + each - 1;
                    if taken.iter().all(|&(a, b)| end < a || start > b) {
                        taken.push((start, end));
                        break;
                    }
                }
            }
            taken.sort();
            for (start, end) in taken {
                planted.push(PlantedSegment { start, end, concept: concept.to_string(), density });
            }
        }
        SyntheticSpec {
            frames,
            fps: 30.0,
            planted,
            background_regions: 2.0,
            stray_rate: 0.03,
            motion_noise: 0.5,
            failure_rate: 0.02,
            width: 1280,
            height: 720,
            seed,
        }
    }

    pub fn half_diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub annotations: VideoAnnotations,
    pub features: TransitionFeatures,
    /// Planted frames per concept.
    pub truths: BTreeMap<String, GroundTruth>,
}

impl SyntheticVideo {
    /// Writes `annotations.jsonl`, `features.jsonl` and `truth_<concept>.txt`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join("annotations.jsonl"))?);
        write_annotations(&self.annotations, &mut out)?;
        out.flush()?;
        let mut out = BufWriter::new(File::create(dir.join("features.jsonl"))?);
        write_features(&self.features, &mut out)?;
        out.flush()?;
        for (concept, truth) in &self.truths {
            truth.write_to(BufWriter::new(File::create(dir.join(format!("truth_{concept}.txt")))?))?;
        }
        Ok(())
    }
}

fn random_box(rng: &mut ChaCha8Rng, width: u32, height: u32) -> BoundingBox {
    let w = rng.random_range(width / 10..=width / 3);
    let h = rng.random_range(height / 10..=height / 3);
    BoundingBox { x: rng.random_range(0..=width - w), y: rng.random_range(0..=height - h), width: w, height: h }
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> SyntheticVideo {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid sigma");
    let n = spec.frames;

    let mut frames: Vec<FrameAnnotation> =
        (0..n).map(|f| FrameAnnotation { frame_index: f, regions: Vec::new(), saliency: None }).collect();
    let mut truths: BTreeMap<String, GroundTruth> = BTreeMap::new();

    for p in &spec.planted {
        let words = group_words(&p.concept);
        let truth = truths.entry(p.concept.clone()).or_default();
        for f in p.start..=p.end.min(n - 1) {
            truth.relevant.insert(f);
            if !rng.random_bool(p.density.clamp(0.0, 1.0)) {
                continue;
            }
            let w = if rng.random_bool(0.6) { p.concept.as_str() } else { words.choose(&mut rng).unwrap() };
            let adj = ADJECTIVES.choose(&mut rng).unwrap();
            let caption = if rng.random_bool(0.3) {
                let bg = group_words(BACKGROUND.choose(&mut rng).unwrap()).choose(&mut rng).unwrap();
                format!("a {adj} {w} near the {bg}")
            } else {
                format!("a {adj} {w}")
            };
            frames[f].regions.push(Region {
                caption,
                confidence: rng.random_range(0.5..1.0),
                bbox: random_box(&mut rng, spec.width, spec.height),
                attention: Some(rng.random_range(0.4..1.0)),
            });
        }
    }

    for frame in frames.iter_mut() {
        let count = (spec.background_regions + unit.sample(&mut rng)).round().max(0.0) as usize;
        for _ in 0..count {
            let w = group_words(BACKGROUND.choose(&mut rng).unwrap()).choose(&mut rng).unwrap();
            let adj = ADJECTIVES.choose(&mut rng).unwrap();
            frame.regions.push(Region {
                caption: format!("the {adj} {w}"),
                confidence: rng.random_range(0.3..1.0),
                bbox: random_box(&mut rng, spec.width, spec.height),
                attention: Some(rng.random_range(0.1..0.6)),
            });
        }
        if rng.random_bool(spec.stray_rate.clamp(0.0, 1.0)) {
            let w = group_words(CONCEPTS.choose(&mut rng).unwrap()).choose(&mut rng).unwrap();
            frame.regions.push(Region {
                caption: format!("a {w}"),
                confidence: rng.random_range(0.2..0.6),
                bbox: random_box(&mut rng, spec.width, spec.height),
                attention: Some(rng.random_range(0.1..0.5)),
            });
        }
        // shuffle region order so planted regions are not always first
        let len = frame.regions.len();
        for i in (1..len).rev() {
            let j = rng.random_range(0..=i);
            frame.regions.swap(i, j);
        }
    }

    let noise = spec.motion_noise.max(0.0);
    let foe: Vec<f64> = (0..n)
        .map(|_| {
            let base = 0.1 + (0.05 * noise * unit.sample(&mut rng)).abs();
            if rng.random_bool(0.05) { base + rng.random_range(0.2..0.8) } else { base }
        })
        .collect();
    let flow: Vec<f64> = (1..n).map(|_| (2.0 + noise * unit.sample(&mut rng)).max(0.0)).collect();
    let disp: Vec<Option<f64>> = (1..n)
        .map(|_| {
            let d = (3.0 + 2.0 * noise * unit.sample(&mut rng)).abs();
            (!rng.random_bool(spec.failure_rate.clamp(0.0, 1.0))).then_some(d)
        })
        .collect();

    const BINS: usize = 16;
    let mut weights: Vec<Vec<f64>> = (0..3).map(|_| (0..BINS).map(|_| rng.random_range(0.5..1.5)).collect()).collect();
    let mut hist = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.random_bool(0.005) {
            // scene change
            for w in weights.iter_mut().flatten() {
                *w = rng.random_range(0.5..1.5);
            }
        }
        for w in weights.iter_mut().flatten() {
            *w *= (0.05 * unit.sample(&mut rng)).exp();
        }
        hist.push(
            weights
                .iter()
                .map(|ch| {
                    let mass: f64 = ch.iter().sum();
                    ch.iter().map(|w| (1000.0 * w / mass).round()).collect()
                })
                .collect(),
        );
    }

    SyntheticVideo {
        annotations: VideoAnnotations { frames, fps: spec.fps },
        features: TransitionFeatures::new(foe, flow, hist, disp, spec.half_diagonal()),
        truths,
    }
}

/// Several videos with every concept planted, plus one user per concept.
#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub world: SyntheticWorld,
    pub videos: Vec<SyntheticVideo>,
    pub users: Vec<PostCorpus>,
}

impl SyntheticSuite {
    pub fn generate(videos: usize, frames: usize, seed: u64) -> Self {
        let world = SyntheticWorld::generate(seed);
        let videos = (0..videos as u64)
            .map(|v| gen_synthetic(&SyntheticSpec::with_layout(frames, &CONCEPTS, 0.2, 3, 0.85, seed + 1 + v)))
            .collect();
        let users = CONCEPTS.iter().enumerate().map(|(i, c)| world.posts(c, 60, seed + 100 + i as u64)).collect();
        SyntheticSuite { world, videos, users }
    }

    /// Writes the world at `dir`, videos under `video_<i>/` and posts under
    /// `users/<concept>.txt`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        self.world.write(dir)?;
        for (i, v) in self.videos.iter().enumerate() {
            v.write(&dir.join(format!("video_{i}")))?;
        }
        let users = dir.join("users");
        fs::create_dir_all(&users)?;
        for u in &self.users {
            fs::write(users.join(format!("{}.txt", u.source_id)), u.posts.join("\n") + "\n")?;
        }
        Ok(())
    }
}
