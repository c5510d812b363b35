//! Metrics, the cross-validation harness and the cross-model report.

mod cv;
mod metrics;
mod report;
pub mod svg;

pub use cv::{folds_to_csv, run_cv, run_cv_with, FoldResult, ScalingScope};
pub use metrics::{mae, r_squared};
pub use report::{compare_models, ComparisonReport, Split, SummaryRow};
