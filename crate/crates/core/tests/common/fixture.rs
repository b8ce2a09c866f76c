//! Hand-derived values for the bundled six-word, four-frame fixture.
//!
//! Topics follow the word order of `embeddings.txt`: person 0, dog 1, car 2,
//! chair 3, computer 4, tree 5. Concept documents are
//! D0 = [car, car, tree], D1 = [tree], D2 = [], D3 = [person, dog, computer,
//! chair], so the corpus holds 8 tokens.

use std::path::PathBuf;

use hyperlapse::framescore::{
    attention_weight, frame_bot, interestingness, load_annotations, tf_idf, uniqueness_weight, ConceptCorpus,
    FrameScorer, IdfMode,
};
use hyperlapse::topicspace::{load_embeddings, TopicLookup, TopicSpace};
use hyperlapse::userprofile::{
    build_user_bot, filter_positive, load_word_set, BagOfTopics, ConceptDocument, ConceptExtractor, PostCorpus,
    SentimentLexicon,
};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `(name, computed, expected)` for every hand-derived fixture value.
pub fn fixture_values() -> Vec<(String, f64, f64)> {
    let mut out: Vec<(String, f64, f64)> = Vec::new();
    let mut push = |name: &str, got: f64, want: f64| out.push((name.to_string(), got, want));

    let ln2 = 2f64.ln();
    let ln8 = 8f64.ln();

    // TF-IDF on the two-document corpus {[car, car, tree], [tree]}
    let docs = |d: &[&[&str]]| d.iter().map(|x| x.iter().map(|s| s.to_string()).collect()).collect();
    let small = ConceptCorpus::from_documents(docs(&[&["car", "car", "tree"], &["tree"]]), IdfMode::Literal);
    push("tf_idf(car, D0) small corpus", tf_idf("car", 0, &small), (1.0 + ln2) * ln2);
    push("tf_idf(car, D0) literal constant", tf_idf("car", 0, &small), 1.173_600_194_5);
    push("tf_idf(tree, D1) small corpus", tf_idf("tree", 1, &small), 4f64.ln());
    push("tf_idf(tree, D1) literal constant", tf_idf("tree", 1, &small), 1.386_294_361_1);
    let single = ConceptCorpus::from_documents(docs(&[&["car"]]), IdfMode::Literal);
    push("tf_idf single-token corpus", tf_idf("car", 0, &single), 0.0);

    let table = load_embeddings(fixture("embeddings.txt")).unwrap();
    let space = TopicSpace::load(fixture("space.txt")).unwrap();
    let stopwords = load_word_set(fixture("stopwords.txt")).unwrap();
    let extractor = ConceptExtractor::new(stopwords, None);
    let video = load_annotations(fixture("annotations.jsonl"), 30.0).unwrap();
    let corpus = ConceptCorpus::build(&video, &extractor, &table, IdfMode::Literal);
    let lookup = TopicLookup::resolve(&table, &space, corpus.concepts()).unwrap();

    push("total tokens", corpus.total_tokens() as f64, 8.0);
    push("topic(car)", lookup.topic("car").unwrap() as f64, 2.0);
    push("topic(tree)", lookup.topic("tree").unwrap() as f64, 5.0);

    let t_car0 = (1.0 + ln2) * 4f64.ln();
    push("tf_idf(car, f0)", tf_idf("car", 0, &corpus), t_car0);
    push("tf_idf(tree, f0)", tf_idf("tree", 0, &corpus), ln8);
    push("tf_idf(tree, f1)", tf_idf("tree", 1, &corpus), ln8);
    push("tf_idf(dog, f3)", tf_idf("dog", 3, &corpus), ln8);
    push("tf_idf(car, f1) absent", tf_idf("car", 1, &corpus), 0.0);

    // region 1 of frame 0 is "car near a tree"
    push("uniqueness(f0, r0, car topic)", uniqueness_weight(&corpus, 0, 0, 2, &lookup), t_car0);
    push("uniqueness(f0, r0, tree topic)", uniqueness_weight(&corpus, 0, 0, 5, &lookup), 0.0);
    push("uniqueness(f0, r1, car topic)", uniqueness_weight(&corpus, 0, 1, 2, &lookup), t_car0);
    push("uniqueness(f0, r1, tree topic)", uniqueness_weight(&corpus, 0, 1, 5, &lookup), ln8);

    push(
        "attention(f3, r0) from 2x2 grid",
        attention_weight(&video.frames[3].regions[0], video.frames[3].saliency.as_ref()).unwrap(),
        0.5,
    );

    let bots: Vec<BagOfTopics> = video.frames.iter().map(|f| frame_bot(f, &corpus, &lookup).unwrap()).collect();
    // f0: 1 * 1 * T(car) + 0.8 * 0.5 * (T(car) + T(tree))
    push("frame0 x_car", bots[0].get(2), 1.4 * t_car0);
    push("frame0 x_tree", bots[0].get(5), 0.4 * ln8);
    push("frame0 x_person", bots[0].get(0), 0.0);
    push("frame1 x_tree", bots[1].get(5), 0.9 * 0.7 * ln8);
    push("frame2 norm", bots[2].norm(), 0.0);
    push("frame3 x_person", bots[3].get(0), 0.5 * 0.6 * ln8);
    push("frame3 x_dog", bots[3].get(1), 0.5 * 0.6 * ln8);
    push("frame3 x_chair", bots[3].get(3), 0.25 * 0.6 * ln8);
    push("frame3 x_computer", bots[3].get(4), 0.25 * 0.6 * ln8);

    // user: positive sentences mention car, tree, car
    let posts = PostCorpus::load(fixture("posts.txt")).unwrap();
    let lexicon = SentimentLexicon::load(fixture("lexicon.txt")).unwrap();
    let doc = extractor.extract(&filter_positive(&posts, &lexicon), &table);
    let user = build_user_bot(&doc, &space, &table).unwrap();
    push("user x_car", user.get(2), 2.0);
    push("user x_tree", user.get(5), 1.0);
    push("user sum", user.sum(), 3.0);
    let direct = build_user_bot(
        &ConceptDocument { concepts: vec!["car".into(), "car".into(), "tree".into()] },
        &space,
        &table,
    )
    .unwrap();
    push("user from [car, car, tree] x_car", direct.get(2), 2.0);

    let (a, b) = (1.4 * t_car0, 0.4 * ln8);
    let score0 = (2.0 * a + b) / (5f64.sqrt() * (a * a + b * b).sqrt());
    let scores = FrameScorer::new(&video, &extractor, &table, &space, IdfMode::Literal)
        .unwrap()
        .score(&user, &video)
        .unwrap()
        .scores;
    push("score f0", scores[0], score0);
    push("score f1", scores[1], 1.0 / 5f64.sqrt());
    push("score f2", scores[2], 0.0);
    push("score f3", scores[3], 0.0);
    push("cosine [1,1,0]·[1,0,1]", cosine(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]), 0.5);
    out
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    interestingness(&BagOfTopics::from_weights(a.to_vec()), &BagOfTopics::from_weights(b.to_vec())).unwrap()
}
