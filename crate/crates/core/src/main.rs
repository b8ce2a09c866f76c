use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};

use hyperlapse::framescore::{load_annotations, InterestProfile};
use hyperlapse::harness::pipeline::{check_lengths, load_extractor, require, uniform_baseline, Resources};
use hyperlapse::harness::synth::SyntheticSuite;
use hyperlapse::harness::tune::{synthetic_cases, tune_lambdas};
use hyperlapse::harness::{run_pipeline, HarnessError, PipelineConfig};
use hyperlapse::metrics::{evaluate, GroundTruth};
use hyperlapse::planner::{load_segments, plan_speedups, write_segments};
use hyperlapse::selector::{load_features, select_plan, SelectionPlan};
use hyperlapse::topicspace::{build_topic_space_with, load_embeddings};
use hyperlapse::userprofile::{BagOfTopics, PostCorpus, SentimentLexicon};

#[derive(Parser)]
#[command(name = "hyperlapse", version, about = "Personalized semantic fast-forward planning")]
struct Cli {
    /// TOML configuration; command-line paths override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster word embeddings into a topic space.
    BuildSpace {
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Number of topics.
        #[arg(long)]
        topics: Option<usize>,
    },
    /// Build a user's bag of topics from their posts.
    ProfileUser {
        #[arg(long)]
        posts: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Score every frame of a video against a user.
    Score {
        #[arg(long)]
        user_bot: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        space: Option<PathBuf>,
    },
    /// Segment a scored video and allocate speed-ups.
    Plan {
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Pick frames inside each planned segment.
    Select {
        #[arg(long)]
        segments: Option<PathBuf>,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Compare a plan with ground truth.
    Evaluate {
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Write a synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 5)]
        videos: usize,
        #[arg(long, default_value_t = 3000)]
        frames: usize,
    },
    /// Tune the planner and selector weights on a synthetic suite.
    Tune {
        #[arg(long, default_value_t = 2)]
        videos: usize,
        #[arg(long, default_value_t = 3000)]
        frames: usize,
    },
    /// Run every stage from configured inputs.
    Run,
}

fn set(slot: &mut Option<PathBuf>, arg: Option<PathBuf>) {
    if arg.is_some() {
        *slot = arg;
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, HarnessError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    info!("writing {}", path.display());
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let out = cli.out.as_path();
    let p = &mut cfg.paths;

    match cli.command {
        Command::BuildSpace { embeddings, topics } => {
            set(&mut p.embeddings, embeddings);
            let k = topics.unwrap_or(cfg.topics);
            let table = load_embeddings(require(&cfg.paths.embeddings, "embeddings")?)?;
            let space = build_topic_space_with(&table, k, cfg.seed, cfg.kmeans_max_iterations)?;
            let path = out.join("space.txt");
            fs::create_dir_all(out)?;
            space.save(&path)?;
            println!("{} topics over {} words, inertia {:.6}", space.k(), table.len(), space.inertia().unwrap_or(0.0));
        }
        Command::ProfileUser { posts, embeddings, space, lexicon } => {
            set(&mut p.posts, posts);
            set(&mut p.embeddings, embeddings);
            set(&mut p.topic_space, space);
            set(&mut p.lexicon, lexicon);
            let res = Resources::load(&cfg)?;
            let bot = res.user_bot(&PostCorpus::load(require(&cfg.paths.posts, "posts")?)?)?;
            bot.write_to(create(out, "user_bot.txt")?)?;
            println!("bag of topics with {} concepts", bot.sum());
        }
        Command::Score { user_bot, annotations, embeddings, space } => {
            set(&mut p.user_bot, user_bot);
            set(&mut p.annotations, annotations);
            set(&mut p.embeddings, embeddings);
            set(&mut p.topic_space, space);
            let table = load_embeddings(require(&cfg.paths.embeddings, "embeddings")?)?;
            let space = hyperlapse::TopicSpace::load(require(&cfg.paths.topic_space, "topic_space")?)?;
            let res = Resources::new(table, space, SentimentLexicon::default(), load_extractor(&cfg)?)?;
            let user = BagOfTopics::load(require(&cfg.paths.user_bot, "user_bot")?)?;
            let video = load_annotations(require(&cfg.paths.annotations, "annotations")?, cfg.fps)?;
            let profile = res.scorer(&video, &cfg)?.score(&user, &video)?;
            profile.write_to(create(out, "profile.txt")?)?;
            println!("scored {} frames", profile.len());
        }
        Command::Plan { profile } => {
            set(&mut p.profile, profile);
            let profile = InterestProfile::load(require(&cfg.paths.profile, "profile")?)?;
            let plan = plan_speedups(&profile, &cfg.planner())?;
            write_segments(&plan.segments, create(out, "segments.txt")?)?;
            println!(
                "{} segments, threshold {:.4}, rates ({}, {}), {} refinement levels",
                plan.segments.len(),
                plan.threshold,
                plan.solution.relevant_rate,
                plan.solution.nonrelevant_rate,
                plan.levels.len()
            );
        }
        Command::Select { segments, profile, features } => {
            set(&mut p.segments, segments);
            set(&mut p.profile, profile);
            set(&mut p.features, features);
            let segments = load_segments(require(&cfg.paths.segments, "segments")?)?;
            let profile = InterestProfile::load(require(&cfg.paths.profile, "profile")?)?;
            let features = load_features(require(&cfg.paths.features, "features")?, cfg.half_diagonal)?;
            check_lengths(profile.len(), &features)?;
            let plan = select_plan(&segments, &profile, &features, &cfg.costs, cfg.tau, cfg.seams)?;
            plan.write_json(create(out, "plan.json")?)?;
            plan.write_indices(create(out, "selected.txt")?)?;
            println!("kept {} of {} frames, rate {:.3}", plan.selected.len(), plan.total_frames, plan.achieved_rate);
        }
        Command::Evaluate { plan, features, truth } => {
            set(&mut p.plan, plan);
            set(&mut p.features, features);
            set(&mut p.ground_truth, truth);
            let plan = SelectionPlan::load(require(&cfg.paths.plan, "plan")?)?;
            let features = load_features(require(&cfg.paths.features, "features")?, cfg.half_diagonal)?;
            check_lengths(plan.total_frames, &features)?;
            let truth = GroundTruth::load(require(&cfg.paths.ground_truth, "ground_truth")?)?;
            let report = evaluate(&plan, &truth, &features, cfg.speedup as f64)?;
            let uniform = evaluate(&uniform_baseline(plan.total_frames, cfg.speedup), &truth, &features, cfg.speedup as f64)
                .map_err(|e| warn!("uniform baseline not evaluated: {e}"))
                .ok();
            serde_json::to_writer_pretty(
                create(out, "metrics.json")?,
                &serde_json::json!({ "hyperlapse": report, "uniform": uniform }),
            )
            .map_err(std::io::Error::from)?;
            println!("{report}");
        }
        Command::Synth { videos, frames } => {
            let suite = SyntheticSuite::generate(videos, frames, cfg.seed);
            suite.write(out)?;
            println!("wrote {videos} videos of {frames} frames and {} users to {}", suite.users.len(), out.display());
        }
        Command::Tune { videos, frames } => {
            let suite = SyntheticSuite::generate(videos, frames, cfg.seed);
            let cases = synthetic_cases(&suite, &cfg)?;
            let result = tune_lambdas(&cases, &cfg)?;
            let tuned = cfg.with_lambdas(&result.lambdas);
            fs::create_dir_all(out)?;
            fs::write(out.join("tuned.toml"), tuned.to_toml())?;
            serde_json::to_writer(create(out, "tune_trace.json")?, &result).map_err(std::io::Error::from)?;
            println!("objective {:.4} (defaults {:.4})", result.objective, result.default_objective);
            println!("lambda1, lambda2, lambda_s, lambda_i, lambda_m, lambda_a = {:?}", result.lambdas);
        }
        Command::Run => {
            let output = run_pipeline(&cfg)?;
            output.write(out)?;
            println!("kept {} of {} frames, rate {:.3}", output.plan.selected.len(), output.plan.total_frames, output.plan.achieved_rate);
            if let (Some(report), Some(uniform)) = (&output.report, &output.baseline) {
                println!("{report}");
                println!("uniform f1 {:.4}", uniform.f1);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
