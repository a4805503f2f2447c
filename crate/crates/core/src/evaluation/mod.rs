//! Cross-validation, majority voting and the frame-count trial study.

mod lovo;
mod report;
mod trials;
mod vote;

pub use lovo::{fold_training_set, lovo_evaluate, lovo_predict, single_video_warnings};
pub use report::{ClassAccuracy, EvalConfig, EvaluationReport, VideoOutcome};
pub use trials::{frames_vs_accuracy, TrialCurve, TrialPoint, DEFAULT_N_LIST, DEFAULT_TRIALS};
pub use vote::{frame_decisions, lovo_majority_vote, majority_vote_classify, VoteOutcome};
