//! The decomposed deep Q-learning planner.

pub mod config;
pub mod episode;
pub mod features;
pub mod learner;
pub mod model;
pub mod replay;
pub mod trainer;

pub use config::{EpsilonSchedule, OptimizerKind, TargetRule, TrainingConfig};
pub use episode::{greedy_plan, run_episode, Episode, EpisodeMetrics};
pub use features::{build_state, AugmentedState, FeatureScales, NetworkSummary, FEATURE_DIM};
pub use learner::{q_target, select_candidate, Learner};
pub use model::TrainedModel;
pub use replay::{ReplayBuffer, Transition};
pub use trainer::{train, train_with, training_csv, write_training_csv, EpisodeLog, Trainer, TRAINING_CSV_HEADER};
