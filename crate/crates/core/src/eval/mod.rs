//! Metrics, cross-validation folds, random search and holdout reports.

pub mod cv;
pub mod folds;
pub mod metrics;
pub mod report;
pub mod search;

pub use cv::{cv_score, cv_score_model, CvOutcome};
pub use folds::{build_folds, Fold, FoldPlan};
pub use metrics::{nrmse, population_sd, rmse, smape};
pub use report::{holdout_evaluate, improvement_table, EvalReport, Normalizer};
pub use search::{random_search, HstmSpace, SearchOutcome, SearchSpace, StlmSpace};
