//! Cross-validation, error metrics, grid search and result tables.

pub mod cv;
pub mod folds;
pub mod metrics;
pub mod report;

pub use cv::{
    cross_validate, cross_validate_prepared, evaluate_specs, grid_search, prepare_folds, rank_cells, CellOutcome,
    CvReport, PreparedFold,
};
pub use folds::{make_folds, make_stratified_folds, FoldPlan, DEFAULT_FOLDS};
pub use metrics::{mae, mse};
pub use report::{read_json, read_summary_csv, write_json, write_summary_csv, SummaryRow};
