//! Personalized semantic fast-forward for first-person video.
//!
//! A user's social-network posts become a bag of topics over a clustered
//! word-embedding space. Every video frame gets an interestingness score
//! from its dense captions, the video is split into segments with
//! per-segment speed-ups, and a shortest path through each segment picks the
//! frames to keep.
//!
//! ```text
//! posts -> userprofile -> BagOfTopics ┐
//! captions -> framescore ------------ ┴> InterestProfile -> planner -> selector -> metrics
//! ```

pub mod framescore;
pub mod harness;
pub mod metrics;
pub mod planner;
pub mod selector;
pub mod topicspace;
pub mod userprofile;

pub use framescore::{FrameScorer, InterestProfile, VideoAnnotations};
pub use harness::{run_pipeline, PipelineConfig};
pub use metrics::{evaluate, GroundTruth, MetricsReport};
pub use planner::{plan_speedups, Segment, SpeedPlan};
pub use selector::{select_plan, SeamMode, SelectionPlan, TransitionFeatures};
pub use topicspace::{build_topic_space, EmbeddingTable, TopicSpace};
pub use userprofile::{BagOfTopics, PostCorpus};
