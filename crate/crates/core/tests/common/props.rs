//! Randomized invariants, runnable with any case count.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use hyperlapse::framescore::{
    frame_bot, interestingness, partial_frame_bot, BoundingBox, ConceptCorpus, FrameAnnotation, IdfMode,
    InterestProfile, Region,
};
use hyperlapse::metrics::shaking_ratio_from;
use hyperlapse::planner::{partition, solve_speedups, speedup_objective, Segment};
use hyperlapse::selector::{
    select_frames, select_plan, shortest_path, transition_cost, CostWeights, SeamMode, TransitionFeatures,
};
use hyperlapse::topicspace::{build_topic_space, EmbeddingTable, TopicLookup};
use hyperlapse::userprofile::{
    build_user_bot, filter_positive, BagOfTopics, ConceptDocument, ConceptExtractor, PostCorpus, SentimentLexicon,
};

type Property = fn(u32) -> Result<(), String>;

/// Every invariant with a short name.
pub const PROPERTIES: [(&str, Property); 14] = [
    ("cosine scale invariance", cosine_scale_invariance),
    ("cosine symmetry and range", cosine_symmetry),
    ("user BoT count identity", user_bot_count_identity),
    ("user BoT permutation invariance", user_bot_permutation_invariance),
    ("frame BoT additivity", frame_bot_additivity),
    ("k-means determinism", kmeans_determinism),
    ("centroid self-assignment", centroid_self_assignment),
    ("segment tiling", segment_tiling),
    ("rate solver bounds", rate_solver_bounds),
    ("lambda scaling keeps the argmin path", lambda_scaling),
    ("selection structure", selection_structure),
    ("shaking ratio trivial and penalty cases", shaking_ratio_cases),
    ("positive filter idempotence", filter_idempotence),
    ("tf-idf limits", tf_idf_limits),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn weights(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], k)
}

fn bot(w: &[f64]) -> BagOfTopics {
    BagOfTopics::from_weights(w.to_vec())
}

pub fn cosine_scale_invariance(cases: u32) -> Result<(), String> {
    let s = (1..8usize).prop_flat_map(|k| (weights(k), weights(k), 1e-3..1e3f64));
    run(cases, s, |(u, f, alpha)| {
        let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
        let a = interestingness(&bot(&u), &bot(&f)).unwrap();
        let b = interestingness(&bot(&scaled), &bot(&f)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        Ok(())
    })
}

pub fn cosine_symmetry(cases: u32) -> Result<(), String> {
    let s = (1..8usize).prop_flat_map(|k| (weights(k), weights(k)));
    run(cases, s, |(a, b)| {
        let ab = interestingness(&bot(&a), &bot(&b)).unwrap();
        let ba = interestingness(&bot(&b), &bot(&a)).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        Ok(())
    })
}

/// 12 words in 2-D on a 4 × 3 lattice, deterministic.
fn small_table() -> EmbeddingTable {
    EmbeddingTable::from_entries(
        (0..12).map(|i| (format!("w{i}"), vec![(i % 4) as f64 * 3.0 + 0.1 * i as f64, (i / 4) as f64 * 5.0])),
    )
    .unwrap()
}

fn concept_doc() -> impl Strategy<Value = Vec<String>> {
    // indices 12.. are out of vocabulary
    prop::collection::vec(0..18usize, 0..40).prop_map(|ix| ix.into_iter().map(|i| format!("w{i}")).collect())
}

pub fn user_bot_count_identity(cases: u32) -> Result<(), String> {
    let table = small_table();
    let space = build_topic_space(&table, 4, 0).unwrap();
    run(cases, concept_doc(), |concepts| {
        let in_vocab = concepts.iter().filter(|c| table.contains(c)).count();
        let bot = build_user_bot(&ConceptDocument { concepts }, &space, &table).unwrap();
        prop_assert_eq!(bot.sum(), in_vocab as f64);
        Ok(())
    })
}

pub fn user_bot_permutation_invariance(cases: u32) -> Result<(), String> {
    let table = small_table();
    let space = build_topic_space(&table, 4, 0).unwrap();
    let s = concept_doc().prop_flat_map(|d| (Just(d.clone()), Just(d).prop_shuffle()));
    run(cases, s, |(a, b)| {
        let x = build_user_bot(&ConceptDocument { concepts: a }, &space, &table).unwrap();
        let y = build_user_bot(&ConceptDocument { concepts: b }, &space, &table).unwrap();
        prop_assert_eq!(x, y);
        Ok(())
    })
}

fn region() -> impl Strategy<Value = (Vec<String>, f64, f64)> {
    (prop::collection::vec(0..14usize, 0..4), 0.0..1.0f64, 0.0..=1.0f64)
        .prop_map(|(ix, conf, att)| (ix.into_iter().map(|i| format!("w{i}")).collect(), conf, att))
}

pub fn frame_bot_additivity(cases: u32) -> Result<(), String> {
    let table = small_table();
    let space = build_topic_space(&table, 4, 0).unwrap();
    let extractor = ConceptExtractor::default();
    let s = (prop::collection::vec(region(), 0..8), prop::collection::vec(region(), 0..4), any::<prop::sample::Index>());
    run(cases, s, |(regions, other, split)| {
        let frame_of = |index: usize, rs: &[(Vec<String>, f64, f64)]| FrameAnnotation {
            frame_index: index,
            regions: rs
                .iter()
                .map(|(c, conf, att)| Region {
                    caption: c.join(" "),
                    confidence: *conf,
                    bbox: BoundingBox { x: 0, y: 0, width: 1, height: 1 },
                    attention: Some(*att),
                })
                .collect(),
            saliency: None,
        };
        let frames = [frame_of(0, &regions), frame_of(1, &other)];
        let docs = frames
            .iter()
            .map(|f| f.regions.iter().map(|r| extractor.extract_text(&r.caption, &table)).collect())
            .collect();
        let corpus = ConceptCorpus::from_region_concepts(docs, IdfMode::Literal);
        let lookup = TopicLookup::resolve(&table, &space, corpus.concepts()).unwrap();
        let cut = if regions.is_empty() { 0 } else { split.index(regions.len() + 1) };
        let left: Vec<usize> = (0..cut).collect();
        let right: Vec<usize> = (cut..regions.len()).collect();
        let full = frame_bot(&frames[0], &corpus, &lookup).unwrap();
        let a = partial_frame_bot(&frames[0], &left, &corpus, &lookup).unwrap();
        let b = partial_frame_bot(&frames[0], &right, &corpus, &lookup).unwrap();
        for k in 0..full.k() {
            let sum = a.get(k) + b.get(k);
            prop_assert!((sum - full.get(k)).abs() <= 1e-12 * (1.0 + full.get(k).abs()));
        }
        Ok(())
    })
}

fn point_cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64)> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 2..30).prop_flat_map(|pts| {
        let n = pts.len();
        (Just(pts), 1..=n.min(6), any::<u64>())
    })
}

fn cloud_table(points: &[Vec<f64>]) -> EmbeddingTable {
    EmbeddingTable::from_entries(points.iter().enumerate().map(|(i, p)| (format!("p{i}"), p.clone()))).unwrap()
}

pub fn kmeans_determinism(cases: u32) -> Result<(), String> {
    run(cases, point_cloud(), |(points, k, seed)| {
        let table = cloud_table(&points);
        let a = build_topic_space(&table, k, seed).unwrap();
        let b = build_topic_space(&table, k, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for w in a.inertia_trace().windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
        Ok(())
    })
}

pub fn centroid_self_assignment(cases: u32) -> Result<(), String> {
    run(cases, point_cloud(), |(points, k, seed)| {
        let space = build_topic_space(&cloud_table(&points), k, seed).unwrap();
        for c in 0..space.k() {
            let first_equal = (0..space.k()).find(|&o| space.centroid(o) == space.centroid(c)).unwrap();
            prop_assert_eq!(space.assign(space.centroid(c)).unwrap(), first_equal);
        }
        Ok(())
    })
}

pub fn segment_tiling(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(0.0..=1.0f64, 1..2000), 1..300usize), |(scores, window)| {
        let f = scores.len();
        let segs = partition(&InterestProfile { scores }, window).unwrap();
        prop_assert_eq!(segs[0].start, 0);
        prop_assert_eq!(segs.last().unwrap().end, f - 1);
        for (i, s) in segs.iter().enumerate() {
            prop_assert_eq!(s.index, i);
            if i > 0 {
                prop_assert_eq!(s.start, segs[i - 1].end + 1);
            }
            if i + 1 < segs.len() {
                prop_assert_eq!(s.len(), window);
            }
        }
        let last = segs.last().unwrap().len();
        if f >= window {
            prop_assert!(2 * last >= window && last < window + window.div_ceil(2));
        } else {
            prop_assert_eq!(last, f);
        }
        Ok(())
    })
}

pub fn rate_solver_bounds(cases: u32) -> Result<(), String> {
    let s = (0..3000usize, 1..3000usize, 1..20u32, 0.0..1.0f64, 0.0..1.0f64);
    run(cases, s, |(ls, lns, target, l1, l2)| {
        let sol = solve_speedups(ls, lns, target, l1, l2, 100).unwrap();
        prop_assert!(1 <= sol.relevant_rate && sol.relevant_rate <= target);
        prop_assert!(target <= sol.nonrelevant_rate && sol.nonrelevant_rate <= 100);
        let uniform = speedup_objective(ls, lns, target, target, target, l1, l2);
        prop_assert!(sol.objective <= uniform + 1e-9 * uniform.max(1.0));
        Ok(())
    })
}

#[derive(Debug, Clone)]
pub struct RandomVideo {
    pub profile: InterestProfile,
    pub features: TransitionFeatures,
}

pub fn random_video(frames: std::ops::Range<usize>) -> impl Strategy<Value = RandomVideo> {
    frames.prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(0.0..1.0f64, n),
            prop::collection::vec(0.0..5.0f64, n - 1),
            prop::collection::vec(prop::collection::vec(prop::collection::vec(0.0..10.0f64, 4), 3), n),
            prop::collection::vec(prop::option::weighted(0.9, 0.0..20.0f64), n - 1),
        )
            .prop_map(|(scores, foe, flow, hist, disp)| RandomVideo {
                profile: InterestProfile { scores },
                features: TransitionFeatures::new(foe, flow, hist, disp, 50.0),
            })
    })
}

fn cost_weights() -> impl Strategy<Value = CostWeights> {
    (0.0..2.0f64, 0.0..2.0f64, 0.0..1.0f64, 0.0..2.0f64).prop_map(|(s, i, m, a)| CostWeights {
        lambda_s: s,
        lambda_i: i,
        lambda_m: m,
        lambda_a: a,
        epsilon: 0.01,
    })
}

pub fn lambda_scaling(cases: u32) -> Result<(), String> {
    let s = (random_video(3..40), cost_weights(), 1..6u32, 1..8usize, -3..4i32);
    run(cases, s, |(v, w, rate, tau, exp)| {
        // a power of two scales every float exactly, so ties survive
        let c = 2f64.powi(exp);
        let scaled = CostWeights {
            lambda_s: w.lambda_s * c,
            lambda_i: w.lambda_i * c,
            lambda_m: w.lambda_m * c,
            lambda_a: w.lambda_a * c,
            ..w
        };
        let n = v.profile.len();
        let cost = |weights: &CostWeights| {
            shortest_path(n, tau, rate, |g, h| {
                transition_cost(g, h, &v.profile, &v.features, rate, weights).unwrap()
            })
        };
        let (p1, c1) = cost(&w);
        let (p2, c2) = cost(&scaled);
        prop_assert_eq!(&p1, &p2);
        prop_assert!((c2 - c * c1).abs() <= 1e-12 * (c * c1).abs().max(1.0), "{c2} vs {}", c * c1);
        Ok(())
    })
}

pub fn selection_structure(cases: u32) -> Result<(), String> {
    let s = (random_video(1..120), cost_weights(), 1..12u32, 1..20usize, 1..40usize);
    run(cases, s, |(v, w, rate, tau, window)| {
        let mut segs = partition(&v.profile, window).unwrap();
        for (i, seg) in segs.iter_mut().enumerate() {
            seg.speedup = rate + (i as u32 % 3);
        }
        for seg in &segs {
            let path = select_frames(seg, &v.profile, &v.features, &w, tau).unwrap();
            prop_assert_eq!(path[0], seg.start);
            prop_assert_eq!(*path.last().unwrap(), seg.end);
            prop_assert!(path.windows(2).all(|p| p[0] < p[1] && p[1] - p[0] <= tau));
        }
        for seams in [SeamMode::Both, SeamMode::Shared] {
            let plan = select_plan(&segs, &v.profile, &v.features, &w, tau, seams).unwrap();
            prop_assert!(plan.selected.windows(2).all(|p| p[0] < p[1] && p[1] - p[0] <= tau));
            for seg in &segs {
                prop_assert!(plan.selected.contains(&seg.start));
                if seams == SeamMode::Both {
                    prop_assert!(plan.selected.contains(&seg.end));
                }
            }
            prop_assert_eq!(*plan.selected.last().unwrap(), v.profile.len() - 1);
        }
        Ok(())
    })
}

pub fn shaking_ratio_cases(cases: u32) -> Result<(), String> {
    let disp = prop::collection::vec(prop::option::weighted(0.7, 0.0..50.0f64), 1..60);
    run(cases, (disp, 1.0..1000.0f64), |(disp, half)| {
        let zeros = vec![Some(0.0); disp.len()];
        prop_assert_eq!(shaking_ratio_from(&zeros, half).unwrap(), 0.0);
        let got = shaking_ratio_from(&disp, half).unwrap();
        match disp.iter().flatten().copied().reduce(f64::max) {
            None => prop_assert_eq!(got, f64::INFINITY),
            Some(max) => {
                let want = disp.iter().map(|d| d.unwrap_or(max) / half).sum::<f64>() / disp.len() as f64;
                prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
                let valid: Vec<f64> = disp.iter().flatten().copied().collect();
                let lo = valid.iter().copied().fold(f64::INFINITY, f64::min) / half;
                prop_assert!(got >= lo - 1e-12 && got <= max / half + 1e-12);
            }
        }
        Ok(())
    })
}

pub fn filter_idempotence(cases: u32) -> Result<(), String> {
    let lexicon = SentimentLexicon::from_pairs([("good", 2), ("bad", -2), ("love", 3), ("meh", -1)]);
    let word = prop::sample::select(vec!["good", "bad", "love", "meh", "car", "tree", "the", "@bob", "#fun"]);
    let end = prop::sample::select(vec!["", ".", "!", "?", "\n"]);
    let post = prop::collection::vec((word, end), 0..12)
        .prop_map(|ws| ws.into_iter().map(|(w, e)| format!("{w}{e}")).collect::<Vec<_>>().join(" "));
    run(cases, prop::collection::vec(post, 0..6), |posts| {
        let once = filter_positive(&PostCorpus::new("u", posts), &lexicon);
        let twice = filter_positive(&PostCorpus::new("u", once.clone()), &lexicon);
        prop_assert_eq!(once, twice);
        Ok(())
    })
}

pub fn tf_idf_limits(cases: u32) -> Result<(), String> {
    run(cases, (1..20usize, 0..50usize), |(tf, extra)| {
        let only = ConceptCorpus::from_documents(vec![vec!["c".to_string(); tf]], IdfMode::Literal);
        prop_assert_eq!(only.tf_idf("c", 0), 0.0);
        let grow = |n: usize| {
            let docs = vec![vec!["c".to_string(); tf], vec!["d".to_string(); n]];
            ConceptCorpus::from_documents(docs, IdfMode::Literal).tf_idf("c", 0)
        };
        prop_assert!(grow(extra + 1) > grow(extra));
        Ok(())
    })
}

/// Segment helper used by other tests.
pub fn segments_of(profile: &InterestProfile, window: usize, rate: u32) -> Vec<Segment> {
    let mut segs = partition(profile, window).unwrap();
    for s in segs.iter_mut() {
        s.speedup = rate;
    }
    segs
}
