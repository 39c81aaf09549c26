//! Forecasting the Short Physical Performance Battery four years ahead.

pub mod cohort;
pub mod error;
pub mod eval;
pub mod learners;
pub mod preprocess;
pub mod scalar;
pub mod shap;
pub mod sppb;

pub use cohort::{FeatureSchema, ParticipantWaveRecord, SupervisedDataset};
pub use error::{Error, Result};
pub use scalar::Real;
pub use sppb::{classify_sppb, total_sppb, CutoffTable, SppbCategory, SppbScore};

pub type Dataset = SupervisedDataset<f64>;
pub type Model = learners::TrainedRegressor<f64>;
pub type Preprocessor = preprocess::PreprocessModel<f64>;
pub type Attributions = shap::AttributionMatrix<f64>;

/// Single-precision counterparts, for memory-bound runs.
pub type Dataset32 = SupervisedDataset<f32>;
pub type Model32 = learners::TrainedRegressor<f32>;
