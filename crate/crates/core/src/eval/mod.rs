//! Accuracy and ranking metrics, train/test splitting, and grid-search
//! cross-validation.

mod cv;
mod metrics;
mod report;
mod split;

pub use cv::{cross_validate, evaluate_split};
pub use metrics::{mae, precision_recall_at_n, precision_recall_curve, precision_recall_from_scores, rmse};
pub use report::{mean_stderr, EvalReport, MetricSummary, RoundMetrics, RANKING_CUTOFFS};
pub use split::{split_kfold, split_monte_carlo, SplitPlan, DEFAULT_TEST_FRACTION};
