use std::collections::HashSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::framescore::{load_annotations, FrameScorer, InterestProfile, VideoAnnotations};
use crate::metrics::{evaluate, GroundTruth, MetricsReport};
use crate::planner::{plan_speedups, write_segments, SpeedPlan};
use crate::selector::{compose, load_features, select_plan, SelectionPlan, TransitionFeatures};
use crate::topicspace::{build_topic_space_with, load_embeddings, EmbeddingTable, TopicSpace};
use crate::userprofile::{
    build_user_bot, filter_positive, load_word_set, BagOfTopics, ConceptExtractor, PostCorpus, SentimentLexicon,
};

use super::{HarnessError, PipelineConfig};

type Result<T> = std::result::Result<T, HarnessError>;

/// The configured path for `what`, which must exist.
pub fn require<'a>(path: &'a Option<PathBuf>, what: &'static str) -> Result<&'a Path> {
    let path = path.as_deref().ok_or(HarnessError::MissingPath(what))?;
    if !path.exists() {
        return Err(HarnessError::MissingFile(path.to_path_buf()));
    }
    Ok(path)
}

/// Inputs shared by every user and video: embeddings, topic space, sentiment
/// lexicon and the concept filter.
#[derive(Debug, Clone)]
pub struct Resources {
    pub table: EmbeddingTable,
    pub space: TopicSpace,
    pub lexicon: SentimentLexicon,
    pub extractor: ConceptExtractor,
}

impl Resources {
    pub fn new(
        table: EmbeddingTable,
        space: TopicSpace,
        lexicon: SentimentLexicon,
        extractor: ConceptExtractor,
    ) -> Result<Self> {
        if table.dim() != space.dim() {
            return Err(HarnessError::Consistency(format!(
                "embeddings have {} dimensions but the topic space has {}",
                table.dim(),
                space.dim()
            )));
        }
        Ok(Resources { table, space, lexicon, extractor })
    }

    /// Loads from configured paths. The topic space is read when its file
    /// exists and built (with `cfg.topics` clusters) otherwise.
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let p = &cfg.paths;
        let table = load_embeddings(require(&p.embeddings, "embeddings")?)?;
        let space = match p.topic_space.as_deref().filter(|path| path.exists()) {
            Some(path) => TopicSpace::load(path)?,
            None => {
                info!("building topic space with {} topics over {} words", cfg.topics, table.len());
                build_topic_space_with(&table, cfg.topics, cfg.seed, cfg.kmeans_max_iterations)?
            }
        };
        let lexicon = SentimentLexicon::load(require(&p.lexicon, "lexicon")?)?;
        Ok(Resources::new(table, space, lexicon, load_extractor(cfg)?)?)
    }

    pub fn user_bot(&self, posts: &PostCorpus) -> Result<BagOfTopics> {
        let sentences = filter_positive(posts, &self.lexicon);
        let doc = self.extractor.extract(&sentences, &self.table);
        info!("{}: {} positive sentences, {} concepts", posts.source_id, sentences.len(), doc.len());
        Ok(build_user_bot(&doc, &self.space, &self.table)?)
    }

    pub fn scorer(&self, video: &VideoAnnotations, cfg: &PipelineConfig) -> Result<FrameScorer> {
        Ok(FrameScorer::new(video, &self.extractor, &self.table, &self.space, cfg.idf)?)
    }
}

pub fn load_extractor(cfg: &PipelineConfig) -> Result<ConceptExtractor> {
    let stopwords = match &cfg.paths.stopwords {
        Some(path) => load_word_set(path)?,
        None => HashSet::new(),
    };
    let nouns = cfg.paths.nouns.as_ref().map(load_word_set).transpose()?;
    Ok(ConceptExtractor::new(stopwords, nouns))
}

pub fn check_lengths(video_frames: usize, features: &TransitionFeatures) -> Result<()> {
    if video_frames != features.len() {
        return Err(HarnessError::Consistency(format!(
            "annotations cover {video_frames} frames but features cover {}",
            features.len()
        )));
    }
    Ok(())
}

/// Planning and selection for one scored video.
pub fn plan_video(
    profile: &InterestProfile,
    features: &TransitionFeatures,
    cfg: &PipelineConfig,
) -> Result<(SpeedPlan, SelectionPlan)> {
    check_lengths(profile.len(), features)?;
    let speed = plan_speedups(profile, &cfg.planner())?;
    let plan = select_plan(&speed.segments, profile, features, &cfg.costs, cfg.tau, cfg.seams)?;
    Ok((speed, plan))
}

/// Every `rate`-th frame starting at frame 0.
pub fn uniform_baseline(total_frames: usize, rate: u32) -> SelectionPlan {
    let frames = (0..total_frames).step_by(rate.max(1) as usize).collect();
    compose(vec![frames], total_frames).expect("uniform frames are increasing and in range")
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub user_bot: BagOfTopics,
    pub profile: InterestProfile,
    pub speed_plan: SpeedPlan,
    pub plan: SelectionPlan,
    pub report: Option<MetricsReport>,
    pub baseline: Option<MetricsReport>,
}

impl PipelineOutput {
    /// Writes `user_bot.txt`, `profile.txt`, `segments.txt`, `plan.json`,
    /// `selected.txt` and, when evaluated, `metrics.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.user_bot.write_to(BufWriter::new(File::create(dir.join("user_bot.txt"))?))?;
        self.profile.write_to(BufWriter::new(File::create(dir.join("profile.txt"))?))?;
        write_segments(&self.speed_plan.segments, BufWriter::new(File::create(dir.join("segments.txt"))?))?;
        self.plan.write_json(BufWriter::new(File::create(dir.join("plan.json"))?))?;
        self.plan.write_indices(BufWriter::new(File::create(dir.join("selected.txt"))?))?;
        if let Some(report) = &self.report {
            let body = serde_json::json!({ "hyperlapse": report, "uniform": self.baseline });
            fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&body).expect("plain numbers"))?;
        }
        Ok(())
    }
}

/// Runs every stage on in-memory inputs.
pub fn run_with(
    res: &Resources,
    posts: &PostCorpus,
    video: &VideoAnnotations,
    features: &TransitionFeatures,
    truth: Option<&GroundTruth>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    check_lengths(video.len(), features)?;
    let user_bot = res.user_bot(posts)?;
    let profile = res.scorer(video, cfg)?.score(&user_bot, video)?;
    let (speed_plan, plan) = plan_video(&profile, features, cfg)?;
    let target = cfg.speedup as f64;
    let (report, baseline) = match truth {
        Some(truth) => {
            let uniform = uniform_baseline(video.len(), cfg.speedup);
            let baseline = evaluate(&uniform, truth, features, target)
                .map_err(|e| warn!("uniform baseline not evaluated: {e}"))
                .ok();
            (Some(evaluate(&plan, truth, features, target)?), baseline)
        }
        None => (None, None),
    };
    Ok(PipelineOutput { user_bot, profile, speed_plan, plan, report, baseline })
}

/// Loads inputs from `cfg.paths` and runs every stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let res = Resources::load(cfg)?;
    let p = &cfg.paths;
    let posts = PostCorpus::load(require(&p.posts, "posts")?)?;
    let video = load_annotations(require(&p.annotations, "annotations")?, cfg.fps)?;
    let features = load_features(require(&p.features, "features")?, cfg.half_diagonal)?;
    let truth = p.ground_truth.as_ref().map(GroundTruth::load).transpose()?;
    run_with(&res, &posts, &video, &features, truth.as_ref(), cfg)
}
