//! Multi-criteria ranking for recommender systems.
//!
//! Candidate items carry predicted ratings on several criteria. They are
//! ordered by Pareto dominance counts (PR), relaxed k-dominance counts (KD),
//! preference-ordering scores (AR, MR, GD, PG), or a hybrid that adds a
//! normalized subsort score to an integer dominance score to separate ties.
//! The [`pipeline`] module evaluates these rankings with k-fold
//! cross-validation, top-N F1 and NDCG.

pub mod dominance;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod predictor;
pub mod ranking;
pub mod types;

pub use dominance::{dominance_counts, k_dominates, pareto_dominates, DominanceCounts, Relaxation};
pub use error::{Error, Result};
pub use metrics::{ConfusionCounts, GroundTruth, MetricsConfig};
pub use pipeline::{
    CandidateProtocol, ExperimentConfig, FoldId, MetricsReport, ReportCell, SynthParams,
};
pub use predictor::{PredictorModel, TrainConfig};
pub use ranking::{rank_candidates, top_n, Orientation, RankVector, RankingOptions, ScoreVector};
pub use types::{
    validate_dataset, CandidateSet, CriteriaVector, Dataset, MajorMethod, MethodSpec, RatingRecord,
    ScoredItem, ScoredList, SubMethod, Violation,
};
